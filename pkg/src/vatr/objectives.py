"""Training objectives.

Four terms, combined by unweighted summation: hinge adversarial loss,
CTC text-recognition loss, writer-classification cross-entropy, and an
L1 style cycle loss.  Every term reduces by mean over its batch so loss
magnitudes do not depend on batch size.  Each term except the
adversarial one can be toggled off for ablations.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import torch
import torch.nn.functional as F

from .content import Charset


@dataclass(frozen=True)
class LossFlags:
    """Per-term enable switches; the adversarial term is always on."""

    adv: bool = True
    htr: bool = True
    writer_class: bool = True
    cycle: bool = True

    @classmethod
    def ablation_rows(cls) -> list["LossFlags"]:
        """All 8 combinations of the three auxiliary terms, adv fixed on."""
        rows = []
        for htr, wclass, cycle in product((False, True), repeat=3):
            rows.append(cls(adv=True, htr=htr, writer_class=wclass, cycle=cycle))
        return rows


@dataclass
class LossBreakdown:
    """Per-term values for one step; disabled terms are recorded as None."""

    adv: float | torch.Tensor | None
    htr: float | torch.Tensor | None
    writer_class: float | torch.Tensor | None
    cycle: float | torch.Tensor | None
    total: float | torch.Tensor
    flags: LossFlags

    def as_floats(self) -> dict[str, float]:
        def f(v):
            if v is None:
                return float("nan")
            return float(v.detach()) if isinstance(v, torch.Tensor) else float(v)

        return {
            "adv": f(self.adv),
            "htr": f(self.htr),
            "class": f(self.writer_class),
            "cycle": f(self.cycle),
            "total": f(self.total),
        }


def adv_loss_discriminator(scores_real: torch.Tensor, scores_fake: torch.Tensor) -> torch.Tensor:
    """Hinge loss for the discriminator: push real above +1, fake below -1."""
    if scores_real.numel() == 0 or scores_fake.numel() == 0:
        raise ValueError("score batches must be nonempty")
    return F.relu(1.0 - scores_real).mean() + F.relu(1.0 + scores_fake).mean()


def adv_loss_generator(scores_fake: torch.Tensor) -> torch.Tensor:
    """Hinge companion for the generator: raise the discriminator's score."""
    if scores_fake.numel() == 0:
        raise ValueError("score batch must be nonempty")
    return -scores_fake.mean()


def ctc_required_length(target: list[int]) -> int:
    """Minimum number of timesteps that admits any valid CTC alignment."""
    repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
    return len(target) + repeats


def htr_loss(recognizer_output: torch.Tensor, transcription: str, charset: Charset) -> torch.Tensor:
    """CTC negative log likelihood of ``transcription``.

    ``recognizer_output`` is a (T, |charset|+1) row-stochastic matrix of
    per-timestep symbol probabilities, blank last.  Returns -log of the
    total probability mass over all alignments that collapse to the
    transcription.
    """
    if recognizer_output.ndim != 2:
        raise ValueError("expected a (T, n_symbols) matrix")
    t_steps, n_symbols = recognizer_output.shape
    if n_symbols != len(charset) + 1:
        raise ValueError(f"got {n_symbols} symbol columns for a {len(charset)}-charset (+1 blank)")
    target = charset.encode(transcription)
    if t_steps < ctc_required_length(target):
        raise ValueError(
            f"{t_steps} timesteps cannot align transcription of required "
            f"length {ctc_required_length(target)}"
        )
    log_probs = torch.log(recognizer_output).unsqueeze(1)  # (T, 1, C)
    targets = torch.tensor([target], dtype=torch.long)
    return F.ctc_loss(
        log_probs,
        targets,
        input_lengths=torch.tensor([t_steps]),
        target_lengths=torch.tensor([len(target)]),
        blank=len(charset),
        reduction="sum",
        zero_infinity=False,
    )


def batched_htr_loss(
    log_probs: torch.Tensor,
    targets: torch.Tensor,
    input_lengths: torch.Tensor,
    target_lengths: torch.Tensor,
    blank: int,
) -> torch.Tensor:
    """Mean over the batch of per-sample CTC negative log likelihoods."""
    per_sample = F.ctc_loss(
        log_probs, targets, input_lengths, target_lengths,
        blank=blank, reduction="none", zero_infinity=True,
    )
    return per_sample.mean()


def writer_class_loss(class_output: torch.Tensor, writer_index: int | torch.Tensor) -> torch.Tensor:
    """Cross entropy -log p(writer) from a probability vector (or batch)."""
    probs = class_output if class_output.ndim == 2 else class_output.unsqueeze(0)
    idx = torch.as_tensor(writer_index, dtype=torch.long).reshape(-1)
    if idx.numel() == 1 and probs.shape[0] > 1:
        idx = idx.expand(probs.shape[0])
    if idx.min() < 0 or idx.max() >= probs.shape[1]:
        raise ValueError(
            f"writer index {int(idx.max())} outside the {probs.shape[1]}-writer training set"
        )
    picked = probs[torch.arange(probs.shape[0]), idx]
    return -(torch.log(picked)).mean()


def cycle_loss(style_real: torch.Tensor, style_fake: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference between two equally-shaped style feature arrays."""
    if style_real.shape != style_fake.shape:
        raise ValueError(f"shape mismatch: {tuple(style_real.shape)} vs {tuple(style_fake.shape)}")
    return (style_real - style_fake).abs().mean()


def total_loss(
    adv: float | torch.Tensor | None = None,
    htr: float | torch.Tensor | None = None,
    writer_class: float | torch.Tensor | None = None,
    cycle: float | torch.Tensor | None = None,
    flags: LossFlags = LossFlags(),
) -> LossBreakdown:
    """Sum the enabled terms with equal weights into a LossBreakdown."""
    terms = {
        "adv": (flags.adv, adv),
        "htr": (flags.htr, htr),
        "writer_class": (flags.writer_class, writer_class),
        "cycle": (flags.cycle, cycle),
    }
    total = None
    kept: dict[str, float | torch.Tensor | None] = {}
    for name, (enabled, value) in terms.items():
        if not enabled:
            kept[name] = None
            continue
        if value is None:
            raise ValueError(f"loss term {name!r} is enabled but was not provided")
        kept[name] = value
        total = value if total is None else total + value
    if total is None:
        raise ValueError("no loss terms enabled")
    return LossBreakdown(
        adv=kept["adv"], htr=kept["htr"], writer_class=kept["writer_class"],
        cycle=kept["cycle"], total=total, flags=flags,
    )
