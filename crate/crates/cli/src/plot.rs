//! Standalone matplotlib scripts written next to the CSVs. Never executed here.

fn tag(x: f64) -> String {
    format!("{x:e}").replace('+', "")
}

const PRELUDE: &str = "\
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(HERE, name)) as f:
        rows = list(csv.DictReader(f))
    cols = {}
    for key in rows[0]:
        cols[key] = [float(r[key]) if r[key] else float('nan') for r in rows]
    return cols

";

pub fn spectrum() -> String {
    format!(
        "{PRELUDE}s = load('spectrum.csv')
n = list(range(1, len(s['unfolded']) + 1))
fig, ax = plt.subplots()
ax.step(s['unfolded'], n, where='post', label='staircase')
ax.plot(s['unfolded'], s['unfolded'], 'k--', lw=0.8, label='mean')
ax.set_xlabel('unfolded energy')
ax.set_ylabel('N')
ax.legend()
fig.savefig(os.path.join(HERE, 'spectrum.png'), dpi=150)
"
    )
}

pub fn spacings() -> String {
    format!(
        "{PRELUDE}h = load('spacings.csv')
mid = [0.5 * (a + b) for a, b in zip(h['bin_left'], h['bin_right'])]
width = [b - a for a, b in zip(h['bin_left'], h['bin_right'])]
fig, ax = plt.subplots()
ax.bar(mid, h['density'], width=width, alpha=0.6, label='measured')
ax.plot(mid, h['reference'], 'k-', label='exp(-s)')
ax.set_xlabel('s')
ax.set_ylabel('P(s)')
ax.set_xlim(0, 5)
ax.legend()
fig.savefig(os.path.join(HERE, 'spacings.png'), dpi=150)
"
    )
}

pub fn rigidity() -> String {
    format!(
        "{PRELUDE}m = load('measured.csv')
t = load('theory.csv')
tc = load('theory_corrected.csv')
k = load('markers.csv')
fig, ax = plt.subplots()
ax.errorbar(m['x'], m['mean'], yerr=m['stderr'], fmt='o', ms=3, label='ensemble')
ax.step(t['x'], t['mean'], where='mid', label='theory')
ax.step(tc['x'], tc['mean'], where='mid', ls='--', label='theory, corrected')
for e in k['eps']:
    ax.axvline(e, color='grey', lw=0.6, ls=':')
ax.set_xlabel('interval center')
ax.set_ylabel('saturation rigidity')
ax.legend()
fig.savefig(os.path.join(HERE, 'rigidity.png'), dpi=150)
"
    )
}

fn per_center(centers: &[f64], body: &str, ylabel: &str, png: &str) -> String {
    let tags: Vec<String> = centers.iter().map(|&c| format!("'{}'", tag(c))).collect();
    format!(
        "{PRELUDE}fig, axes = plt.subplots(len([{list}]), 1, squeeze=False, figsize=(6, 3.5 * {n}))
for ax, t in zip(axes[:, 0], [{list}]):
{body}    ax.set_title('center ' + t)
    ax.set_ylabel('{ylabel}')
    ax.legend()
axes[-1, 0].set_xlabel('E')
fig.tight_layout()
fig.savefig(os.path.join(HERE, '{png}'), dpi=150)
",
        list = tags.join(", "),
        n = centers.len(),
    )
}

pub fn variance(centers: &[f64]) -> String {
    per_center(
        centers,
        "    m = load('measured_eps' + t + '.csv')
    th = load('theory_eps' + t + '.csv')
    z = load('zeros_eps' + t + '.csv')
    ax.plot(m['x'], m['mean'], label='ensemble')
    ax.plot(th['x'], th['mean'], label='theory')
    for x in z['x']:
        ax.axvline(x, color='grey', lw=0.6, ls=':')
",
        "number variance",
        "variance.png",
    )
}

pub fn correlation(centers: &[f64]) -> String {
    per_center(
        centers,
        "    c = load('correlation_eps' + t + '.csv')
    ax.plot(c['omega'], c['k_inf'], lw=0.6, label='orbit sum')
    ax.plot(c['omega'], c['k_smooth'], label='smooth')
    ax.plot(c['omega'], c['k_sinc'], ls='--', label='sinc')
",
        "K",
        "correlation.png",
    )
}
