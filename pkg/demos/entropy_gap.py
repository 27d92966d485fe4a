"""
Where does Bob's knowledge come from?
=====================================

In the precomputed OT protocol Bob holds the V half of an oblivious key.
Before the attack his uncertainty about x is t; after Uhlmann rewinding it
drops, and the drop can never exceed the resource's entropy sum.
"""

from qsfe import precomputed_ot, thm2_experiment
from qsfe.attack import alice_guessing, give_purification
from qsfe.primitives import embed_pure, entropy_sum

p, key = precomputed_ot(2, 1)
print("entropy sum of the key:", entropy_sum(key))

for y in p.function.y_alphabet:
    e = thm2_experiment(p, key, fixed_y=y)
    print(f"y={y}: H(X|B)={e.h_x_given_b:.4f}  H(X|BB')={e.h_x_given_bb:.4f}  gap={e.gap:.4f}  "
          f"within [t, sum]: {e.lower_ok and e.upper_ok}")

# Bob can only rewind if he also holds the purifying register of the key
full = give_purification(p, embed_pure(key))
print("guessing probability for x from Bob's final state:", round(alice_guessing(full, "0")[0], 9))
