"""What a hard-concrete gate does, one dimension at a time.

Draws many training-time gates for a handful of logits, compares the share of
non-zero draws with the closed-form P(z > 0), then prints the deterministic
inference mask and the lambda/tau schedule a run would follow.

    python demos/gate_anatomy.py
"""
import numpy as np

from l0gm.gate import GateParams, expected_l0, inference_mask, sample_gate_train
from l0gm.numcore import RngStream, Tensor
from l0gm.schedule import AnnealSpec, lambda_at, tau_at

alpha = np.array([-3.0, -1.0, 0.0, 1.0, 3.0])
gp = GateParams(Tensor(alpha))
rng = RngStream(0)

print("logit   P(z>0) closed   P(z>0) sampled   P(z=1) sampled   mean z")
for tau in (1.0, 0.5):
    z = np.stack([sample_gate_train(gp, tau, rng).z.data for _ in range(20_000)])
    closed = 1 / (1 + np.exp(-(alpha - tau * np.log(0.1 / 1.1))))
    print(f"tau = {tau}")
    for j, a in enumerate(alpha):
        print(f"{a:5.1f}   {closed[j]:14.4f}   {(z[:, j] > 0).mean():14.4f}   "
              f"{(z[:, j] == 1).mean():14.4f}   {z[:, j].mean():6.3f}")
    print(f"expected L0 = {expected_l0(gp, tau).item():.4f} of {gp.dim}")

# at test time the gate is a threshold on sigmoid(alpha), no noise
print("inference mask:", inference_mask(gp).astype(int))

spec = AnnealSpec(total_steps=1000, warmup_frac=0.1, tau_start=1.0, tau_end=0.5, lambda_target=1e-3)
print("\nstep   lambda     tau")
for t in (0, 50, 100, 250, 500, 1000):
    print(f"{t:4d}   {lambda_at(spec, t):.1e}   {tau_at(spec, t):.3f}")
