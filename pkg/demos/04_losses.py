#!/usr/bin/env python3
"""The four-term training objective, numerically.

Hinge adversarial loss for real/fake scores, CTC negative log likelihood
for text content, cross entropy over writers for style identity, and an
L1 cycle term between style features.  The total is their unweighted
sum; each auxiliary term can be toggled for ablations.
"""

import math

import torch

from vatr.content import Charset
from vatr.objectives import (
    LossFlags,
    adv_loss_discriminator,
    adv_loss_generator,
    cycle_loss,
    htr_loss,
    total_loss,
    writer_class_loss,
)


def main():
    for real, fake in [(1.0, -1.0), (0.0, 0.0), (-1.0, 1.0)]:
        loss = adv_loss_discriminator(torch.tensor([real]), torch.tensor([fake]))
        print(f"hinge(D): real={real:+.0f} fake={fake:+.0f} -> {loss.item():.1f}")
    print(f"hinge(G): fake=+2 -> {adv_loss_generator(torch.tensor([2.0])).item():.1f}")

    charset = Charset.from_text("a")
    uniform = torch.full((1, 2), 0.5)
    loss = htr_loss(uniform, "a", charset)
    print(f"CTC: T=1, uniform over {{a, blank}}, label 'a' -> {loss.item():.4f}"
          f" (= -log 0.5 = {-math.log(0.5):.4f})")

    probs = torch.full((4,), 0.25)
    print(f"writer CE: uniform over 4 writers -> {writer_class_loss(probs, 2).item():.4f}"
          f" (= log 4 = {math.log(4):.4f})")

    a = torch.randn(6, 8)
    print(f"cycle: identical style features -> {cycle_loss(a, a.clone()).item():.1f}")
    print(f"cycle: offset by +1 everywhere  -> {cycle_loss(a, a + 1).item():.1f}")

    breakdown = total_loss(adv=1.0, htr=2.0, writer_class=3.0, cycle=4.0)
    print(f"total(1, 2, 3, 4) = {breakdown.total}")
    print(f"ablation rows (adv always on): {len(LossFlags.ablation_rows())}")
    adv_only = LossFlags(htr=False, writer_class=False, cycle=False)
    print(f"adv-only row: total = {total_loss(adv=1.5, flags=adv_only).total}")


if __name__ == "__main__":
    main()
