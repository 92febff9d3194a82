"""Why Z340 looks transposed: period scan, shuffle baselines and the pivot.

Run: python walkthroughs/z340_statistics.py
"""
from zodiac import data, stats

z340, z408 = data.z340(), data.z408()

scan = stats.period_scan(z340, 1, 170)
best = max(scan, key=lambda r: r.total_repeats)
print(f"Z340 period 1: {scan[0].total_repeats} repeating bigrams")
print(f"Z340 best period: {best.period} with {best.total_repeats}")
by_p = {r.period: r.total_repeats for r in scan}
print("periods 5, 39, 85:", by_p[5], by_p[39], by_p[85])
print("periods in 2..170 at or above period 1:",
      sum(v >= by_p[1] for p, v in by_p.items() if p >= 2))

for name, grid in (("Z340", z340), ("Z408", z408)):
    b = stats.shuffle_baseline(grid, 1, 100_000, seed=0)
    print(f"{name}: observed {b.observed:.0f}, shuffled mean {b.mean:.2f}, z = {b.z:.2f}")

# Z408 is a plain homophonic cipher and already peaks at period 1
print("Z408 best period:", max(stats.period_scan(z408, 1, 204),
                               key=lambda r: r.total_repeats).period)

rows = stats.row_repeat_analysis(z340)
print(f"rows without a repeated symbol: {rows.clean_rows} {rows.clean_row_indices}")
for pat in stats.pivot_search(z340):
    print(f"pivot pair {pat.orientation}: corners {pat.first.corner} and {pat.second.corner}")
print(f"index of coincidence {stats.index_of_coincidence(z340):.4f}, "
      f"section multiplicity {stats.multiplicity(z340.subgrid(0, 9)):.4f}")
