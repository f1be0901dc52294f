"""Tour of the reverse-mode tape: build a loss, differentiate, verify.

The engine records matrix ops on 2-D float64 tensors and replays them
backwards. The demo trains nothing; it just checks a handful of
gradients against central finite differences.
"""
import numpy as np

from epirisk import autodiff as ad

rng = np.random.default_rng(0)

# a two layer network on random data, cross entropy at the end
x = ad.Tensor(rng.standard_normal((12, 5)))
w1 = ad.Tensor(rng.standard_normal((5, 8)) * 0.5)
b1 = ad.Tensor(np.zeros((1, 8)))
w2 = ad.Tensor(rng.standard_normal((8, 3)) * 0.5)
labels = rng.integers(0, 3, size=12)


def forward():
    h = ad.relu(ad.linear(x, w1, b1))
    return ad.cross_entropy(ad.softmax_rows(ad.linear(h, w2)), labels)


with ad.Tape() as tape:
    loss = forward()
    tape.backward(loss)
print(f"loss = {loss.item():.6f}")

eps = 1e-6
worst = 0.0
for name, p in (("w1", w1), ("b1", b1), ("w2", w2)):
    analytic = p.grad.copy()
    for idx in np.ndindex(*p.data.shape):
        keep = p.data[idx]
        p.data[idx] = keep + eps
        up = forward().item()
        p.data[idx] = keep - eps
        dn = forward().item()
        p.data[idx] = keep
        fd = (up - dn) / (2 * eps)
        a = analytic[idx]
        worst = max(worst, abs(a - fd) / max(abs(a), abs(fd), 1e-6))
    print(f"{name}: |grad| mean {np.abs(analytic).mean():.4f}")
print(f"max relative error vs finite differences: {worst:.2e}")

# gradients accumulate until cleared, so zero them between tapes
w1.zero_grad(); b1.zero_grad(); w2.zero_grad()

# a few Adam steps reduce the loss
opt = ad.Adam({"w1": w1, "b1": b1, "w2": w2}, lr=0.05)
for step in range(20):
    for p in (w1, b1, w2):
        p.zero_grad()
    with ad.Tape() as tape:
        loss = forward()
        tape.backward(loss)
    opt.step()
    if step % 5 == 0:
        print(f"step {step:2d} loss {loss.item():.4f}")
print(f"final loss {forward().item():.4f}")
