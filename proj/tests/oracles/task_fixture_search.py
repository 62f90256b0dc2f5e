"""Search for 8 integer durations with min 7, max 32, mean 15, sample SD 8."""
import itertools

N, LO, HI, MEAN, SD = 8, 7, 32, 15, 8
target_ss = SD * SD * (N - 1)

for rest in itertools.combinations_with_replacement(range(LO, HI + 1), N - 2):
    xs = (LO,) + rest + (HI,)
    if sum(xs) != N * MEAN:
        continue
    if sum((x - MEAN) ** 2 for x in xs) == target_ss:
        print(",".join(map(str, xs)))
        break
