"""Generate Z340-shaped test ciphers and see how often the solver wins.

Run: python walkthroughs/generated_suite.py [count]
"""
import sys
import time

from zodiac import data, language, solver, stats
from zodiac import generator as gen

count = int(sys.argv[1]) if len(sys.argv) > 1 else 5
z340 = data.z340()
model = language.english_model(5)

exact = 0
for i, (grid, key, pt) in enumerate(gen.generate_suite(count, 2024, z340)):
    t0 = time.perf_counter()
    found = solver.solve(grid, model).plaintext.letters
    same = sum(a == b for a, b in zip(found, pt.letters)) / len(pt)
    exact += found == pt.letters
    print(f"#{i}: {len(grid.alphabet)} symbols, "
          f"{stats.repeating_bigram_count(grid, 1).total_repeats} repeats, "
          f"{same:.1%} letters right in {time.perf_counter() - t0:.1f} s")
print(f"exact recoveries: {exact}/{count}")
