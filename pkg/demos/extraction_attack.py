"""
Extracting Alice's input from an almost perfect protocol
========================================================

A dishonest Bob runs the honest measurement for one input, rewinds with
an Uhlmann rotation, and measures again for the next input. When the
protocol is correct and hides y from Alice, every answer comes out right.
"""

from qsfe import builtin, canonical_protocol, check_bob_security, check_correctness, extraction_attack
from qsfe.attack import attack_bound_check

f = builtin("ot", n=2, k=1)
print(f"function {f.name}: |X|={len(f.x_alphabet)}, |Y|={len(f.y_alphabet)}")

# noise replaces Bob's copy of x by |0> with probability eta
for eta in (0.0, 1e-4, 1e-2, 0.1):
    p = canonical_protocol(f, eta)
    res = extraction_attack(p)
    chk = attack_bound_check(p, res)
    print(f"eta={eta:<7g} correctness err={check_correctness(p):.2e}  bob-security={check_bob_security(p):.1e}  "
          f"joint success={res.joint_success:.6f}  guarantee={max(chk['prop1_simple'], chk['prop1_chain']):.6f}")

# order matters only through the per-step failures
res = extraction_attack(canonical_protocol(f, 0.05), ["1", "0"])
print("reversed order, per-step failures:", [round(v, 6) for v in res.per_step_fail])
