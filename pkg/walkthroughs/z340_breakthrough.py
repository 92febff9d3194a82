"""From the raw Z340 grid to the plaintext.

1. Undo the (1,2)-decimation of the first section and watch repeats jump.
2. Fix the known words as cribs and count how much of the key they pin.
3. Anneal a key for the three-section plan.
4. Replay the published key with corrections.

Step 3 takes about half a minute.
"""
from zodiac import data, language, reproduce, solver, stats
from zodiac import transposition as tp

z340 = data.z340()
dec = tp.parse_spec(data.read_text("decimation_1_2.spec"))
before = stats.repeating_bigram_count(z340, 1).total_repeats
after = stats.repeating_bigram_count(tp.apply(z340, dec), 1).total_repeats
print(f"period-1 repeats: {before} as written, {after} after decimation")

section1 = tp.apply(z340.subgrid(0, 9), dec)
cribs = solver.parse_cribs(data.read_text("z340_section1.cribs"))
partial = solver.derive_constraints(section1, cribs)
print(f"cribs fix {len(partial)}/{len(section1.alphabet)} symbols, "
      f"{solver.determined_positions(section1, partial)}/{section1.n} positions")

model = language.english_model(5)
plan = tp.parse_spec(data.read_text("z340_breakthrough_plan.spec"))
cand = solver.solve(tp.apply(z340, plan), model, solver.SolverConfig(cribs=tuple(cribs)))
print("annealed:", language.segment_words(cand.plaintext)[:120], "...")

rep = reproduce.reproduce()
print("published key:", rep.corrected())
