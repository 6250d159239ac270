"""Training loops for the mask generator (G1) and the annotated-image
generator (G2), plus checkpointing.

G2 trains multi-task: an image head against an image discriminator and a
fixed-feature perceptual term, and a segmentation head against a
segmentation discriminator plus soft-Dice + cross-entropy supervision.
Semi-supervision first warms up on the labeled subset, then pseudo-labels
the unlabeled items and trusts only pixels whose confidence (max class
probability) clears the threshold. Discriminators are stepped before the
generator in every epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .data import Corpus, batch_tensors, epoch_order, to_tensor
from .losses import (
    PerceptualLoss,
    lsgan_d_loss,
    lsgan_g_loss,
    masked_pseudo_loss,
    segmentation_loss,
)
from .models import (
    AnnotatedGenerator,
    FrozenFeatureNet,
    MaskGenerator,
    PatchDiscriminator,
)

LOSS_TERMS = ("adv_image", "adv_seg", "perceptual", "seg_supervised", "seg_pseudo")


@dataclass
class TrainConfig:
    seed: int = 0
    epochs: int = 8
    warmup_epochs: int = 4
    batch_size: int = 8
    lr: float = 2e-3
    d_lr: float = 1e-3
    confidence_threshold: float = 0.8
    # one weight per loss term, order matching LOSS_TERMS
    loss_weights: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.0)
    latent_dim: int = 64
    g1_epochs: int = 30
    g1_batch_size: int = 16
    g1_lr: float = 2e-3
    # weight of the value-marginal matching term that counters mode collapse
    g1_hist_weight: float = 1.0

    def weight(self, term: str) -> float:
        return self.loss_weights[LOSS_TERMS.index(term)]


@dataclass
class TrainState:
    g2: AnnotatedGenerator
    d_image: PatchDiscriminator
    d_seg: PatchDiscriminator
    opt_g: torch.optim.Optimizer
    opt_d: torch.optim.Optimizer
    config: TrainConfig
    epoch: int = 0
    loss_history: dict = field(default_factory=lambda: {k: [] for k in LOSS_TERMS})


class NonFiniteLossError(RuntimeError):
    def __init__(self, term, value, epoch):
        super().__init__(f"loss term {term} became non-finite ({value}) at epoch {epoch}")
        self.term = term
        self.value = value
        self.epoch = epoch


def _check_finite(terms: dict, epoch: int) -> None:
    for name, value in terms.items():
        if not np.isfinite(value):
            raise NonFiniteLossError(name, value, epoch)


def make_train_state(cfg: TrainConfig) -> TrainState:
    torch.manual_seed(cfg.seed)
    g2 = AnnotatedGenerator()
    d_image = PatchDiscriminator(1)
    d_seg = PatchDiscriminator(3)
    opt_g = torch.optim.Adam(g2.parameters(), lr=cfg.lr, betas=(0.5, 0.999))
    opt_d = torch.optim.Adam(
        list(d_image.parameters()) + list(d_seg.parameters()),
        lr=cfg.d_lr,
        betas=(0.5, 0.999),
    )
    return TrainState(g2=g2, d_image=d_image, d_seg=d_seg, opt_g=opt_g, opt_d=opt_d,
                      config=cfg)


def _soft_seg(labels: torch.Tensor) -> torch.Tensor:
    from .losses import one_hot

    return one_hot(labels)


def _train_g2_epoch(state: TrainState, labeled, pseudo_items, perceptual: PerceptualLoss):
    """One epoch: discriminators first, then the generator."""
    cfg = state.config
    g2, d_image, d_seg = state.g2, state.d_image, state.d_seg
    sums = {k: 0.0 for k in LOSS_TERMS}
    counts = {k: 0 for k in LOSS_TERMS}

    def accumulate(name, value):
        sums[name] += float(value.detach())
        counts[name] += 1

    mixed = [(t, None) for t in labeled] + list(pseudo_items)
    mixed_order = epoch_order(len(mixed), cfg.seed + 1, state.epoch)
    batches = []
    for start in range(0, len(mixed), cfg.batch_size):
        chunk = [mixed[i] for i in mixed_order[start : start + cfg.batch_size]]
        if len(chunk) >= 2:
            batches.append(chunk)

    for chunk in batches:
        triples = [c[0] for c in chunk]
        masks, images, _ = batch_tensors(triples)

        # discriminator step
        with torch.no_grad():
            fake_img, fake_seg_logits = g2(masks)
            fake_seg = torch.softmax(fake_seg_logits, dim=1)
        real_seg_batch = [c for c in chunk if c[0].seg is not None]
        d_loss = lsgan_d_loss(d_image(images), d_image(fake_img))
        if real_seg_batch:
            real_segs = torch.stack(
                [torch.from_numpy(c[0].seg.astype(np.int64)) for c in real_seg_batch]
            )
            d_loss = d_loss + lsgan_d_loss(d_seg(_soft_seg(real_segs)), d_seg(fake_seg))
        state.opt_d.zero_grad(set_to_none=True)
        d_loss.backward()
        state.opt_d.step()

        # generator step
        synth_img, seg_logits = g2(masks)
        seg_probs = torch.softmax(seg_logits, dim=1)
        adv_image = lsgan_g_loss(d_image(synth_img))
        adv_seg = lsgan_g_loss(d_seg(seg_probs))
        percep = perceptual(synth_img, images)
        g_loss = (
            cfg.weight("adv_image") * adv_image
            + cfg.weight("adv_seg") * adv_seg
            + cfg.weight("perceptual") * percep
        )
        accumulate("adv_image", adv_image)
        accumulate("adv_seg", adv_seg)
        accumulate("perceptual", percep)

        sup_idx = [i for i, c in enumerate(chunk) if c[0].seg is not None and c[1] is None]
        if sup_idx:
            sup_labels = torch.stack(
                [torch.from_numpy(chunk[i][0].seg.astype(np.int64)) for i in sup_idx]
            )
            seg_sup = segmentation_loss(seg_logits[sup_idx], sup_labels)
            g_loss = g_loss + cfg.weight("seg_supervised") * seg_sup
            accumulate("seg_supervised", seg_sup)

        pseudo_idx = [i for i, c in enumerate(chunk) if c[1] is not None]
        if pseudo_idx:
            pl = torch.stack([chunk[i][1][0] for i in pseudo_idx])
            conf = torch.stack([chunk[i][1][1] for i in pseudo_idx])
            seg_pseudo = masked_pseudo_loss(
                seg_logits[pseudo_idx], pl, conf, cfg.confidence_threshold
            )
            g_loss = g_loss + cfg.weight("seg_pseudo") * seg_pseudo
            accumulate("seg_pseudo", seg_pseudo)

        state.opt_g.zero_grad(set_to_none=True)
        g_loss.backward()
        state.opt_g.step()

    means = {k: (sums[k] / counts[k]) if counts[k] else 0.0 for k in LOSS_TERMS}
    _check_finite(means, state.epoch)
    for k, v in means.items():
        state.loss_history[k].append(v)
    state.epoch += 1


def pseudo_label(g2: AnnotatedGenerator, triples) -> list:
    """(pseudo labels, confidence) per unlabeled triple; confidence is the
    per-pixel max class probability."""
    g2.eval()
    out = []
    with torch.no_grad():
        for t in triples:
            _, logits = g2(to_tensor(t.mask).unsqueeze(0))
            probs = torch.softmax(logits, dim=1)[0]
            conf, labels = probs.max(dim=0)
            out.append((t, (labels, conf)))
    g2.train()
    return out


def train_annotated_generator(labeled, unlabeled, cfg: TrainConfig,
                              state: TrainState | None = None) -> TrainState:
    """Semi-supervised multi-task training.

    `labeled` holds (mask, image, seg) triples; `unlabeled` holds
    (mask, image) triples (seg=None). With no unlabeled items this is exactly
    fully-supervised training.
    """
    labeled = list(labeled)
    unlabeled = list(unlabeled)
    if not labeled:
        raise ValueError("need at least one labeled (mask, image, seg) triple")
    if state is None:
        state = make_train_state(cfg)
    perceptual = PerceptualLoss(FrozenFeatureNet())

    warmup = min(cfg.warmup_epochs, cfg.epochs) if unlabeled else cfg.epochs
    while state.epoch < warmup:
        _train_g2_epoch(state, labeled, [], perceptual)
    if unlabeled and state.epoch < cfg.epochs:
        pseudo_items = pseudo_label(state.g2, unlabeled)
        while state.epoch < cfg.epochs:
            _train_g2_epoch(state, labeled, pseudo_items, perceptual)
    return state


def evaluate_segmentation_dice(g2: AnnotatedGenerator, triples) -> list[float]:
    """Per-case mean foreground Dice (lung and lesion) of the seg head."""
    g2.eval()
    scores = []
    with torch.no_grad():
        for t in triples:
            _, logits = g2(to_tensor(t.mask).unsqueeze(0))
            pred = logits.argmax(dim=1)[0].numpy()
            gt = t.seg
            per_class = []
            for cls in (1, 2):
                a = pred == cls
                b = gt == cls
                denom = a.sum() + b.sum()
                if denom == 0:
                    continue
                per_class.append(2.0 * np.logical_and(a, b).sum() / denom)
            scores.append(float(np.mean(per_class)) if per_class else 1.0)
    g2.train()
    return scores


@dataclass
class MaskGanState:
    g1: MaskGenerator
    d: PatchDiscriminator
    opt_g: torch.optim.Optimizer
    opt_d: torch.optim.Optimizer
    vocab: tuple[int, ...]
    threshold_t: int
    latent_gen: torch.Generator
    epoch: int = 0
    loss_history: dict = field(default_factory=lambda: {"g": [], "d": []})


def train_mask_generator(corpus: Corpus, cfg: TrainConfig,
                         state: MaskGanState | None = None,
                         epochs: int | None = None) -> MaskGanState:
    """Adversarial training of the latent -> mask generator.

    Needs at least 64 training masks. Generated rasters live on the corpus
    vocabulary (multiples of t), so exports snap by construction.
    """
    masks = [t.mask for t in corpus.triples]
    if len(masks) < 64:
        raise ValueError(f"need at least 64 training masks, got {len(masks)}")
    size = masks[0].shape[0]
    if state is None:
        torch.manual_seed(cfg.seed + 7)
        vocab = corpus.vocab
        g1 = MaskGenerator(vocab_size=len(vocab), latent_dim=cfg.latent_dim, out_size=size)
        d = PatchDiscriminator(1)
        state = MaskGanState(
            g1=g1,
            d=d,
            opt_g=torch.optim.Adam(g1.parameters(), lr=cfg.g1_lr, betas=(0.5, 0.999)),
            opt_d=torch.optim.Adam(d.parameters(), lr=cfg.g1_lr / 2, betas=(0.5, 0.999)),
            vocab=vocab,
            threshold_t=corpus.threshold_t,
            latent_gen=torch.Generator().manual_seed(cfg.seed + 11),
        )
    vocab_values = torch.tensor(state.vocab, dtype=torch.float32) / 255.0
    total_epochs = cfg.g1_epochs if epochs is None else epochs

    real_tensors = [to_tensor(m) for m in masks]
    # corpus-wide marginal over vocabulary values, for the coverage term
    counts = np.zeros(len(state.vocab), dtype=np.float64)
    lut = {v: i for i, v in enumerate(state.vocab)}
    for m in masks:
        vals, c = np.unique(m, return_counts=True)
        for v, n in zip(vals, c):
            counts[lut[int(v)]] += n
    marginal = torch.tensor(counts / counts.sum(), dtype=torch.float32)

    for _ in range(total_epochs):
        order = epoch_order(len(real_tensors), cfg.seed + 3, state.epoch)
        g_sum = d_sum = 0.0
        nbatch = 0
        for start in range(0, len(real_tensors), cfg.g1_batch_size):
            idx = order[start : start + cfg.g1_batch_size]
            if idx.size < 2:
                continue
            real = torch.stack([real_tensors[i] for i in idx])
            z = torch.randn(idx.size, cfg.latent_dim, generator=state.latent_gen)

            with torch.no_grad():
                probs = torch.softmax(state.g1(z), dim=1)
                fake = (probs * vocab_values.view(1, -1, 1, 1)).sum(dim=1, keepdim=True)
            d_loss = lsgan_d_loss(state.d(real), state.d(fake))
            state.opt_d.zero_grad(set_to_none=True)
            d_loss.backward()
            state.opt_d.step()

            probs = torch.softmax(state.g1(z), dim=1)
            fake = (probs * vocab_values.view(1, -1, 1, 1)).sum(dim=1, keepdim=True)
            coverage = (probs.mean(dim=(0, 2, 3)) - marginal).abs().sum()
            g_loss = lsgan_g_loss(state.d(fake)) + cfg.g1_hist_weight * coverage
            state.opt_g.zero_grad(set_to_none=True)
            g_loss.backward()
            state.opt_g.step()

            g_sum += float(g_loss.detach())
            d_sum += float(d_loss.detach())
            nbatch += 1
        means = {"g": g_sum / max(nbatch, 1), "d": d_sum / max(nbatch, 1)}
        _check_finite(means, state.epoch)
        state.loss_history["g"].append(means["g"])
        state.loss_history["d"].append(means["d"])
        state.epoch += 1
    return state


def save_checkpoint(path, state: TrainState) -> Path:
    path = Path(path)
    torch.save(
        {
            "kind": "g2",
            "g2": state.g2.state_dict(),
            "d_image": state.d_image.state_dict(),
            "d_seg": state.d_seg.state_dict(),
            "opt_g": state.opt_g.state_dict(),
            "opt_d": state.opt_d.state_dict(),
            "epoch": state.epoch,
            "loss_history": state.loss_history,
            "config": vars(state.config) | {"loss_weights": list(state.config.loss_weights)},
        },
        path,
    )
    return path


def load_checkpoint(path) -> TrainState:
    payload = torch.load(Path(path), weights_only=False)
    if payload.get("kind") != "g2":
        raise ValueError(f"{path} is not a G2 checkpoint")
    cfg_dict = dict(payload["config"])
    cfg_dict["loss_weights"] = tuple(cfg_dict["loss_weights"])
    cfg = TrainConfig(**cfg_dict)
    state = make_train_state(cfg)
    state.g2.load_state_dict(payload["g2"])
    state.d_image.load_state_dict(payload["d_image"])
    state.d_seg.load_state_dict(payload["d_seg"])
    state.opt_g.load_state_dict(payload["opt_g"])
    state.opt_d.load_state_dict(payload["opt_d"])
    state.epoch = payload["epoch"]
    state.loss_history = payload["loss_history"]
    return state


def save_mask_gan(path, state: MaskGanState) -> Path:
    path = Path(path)
    torch.save(
        {
            "kind": "g1",
            "g1": state.g1.state_dict(),
            "d": state.d.state_dict(),
            "opt_g": state.opt_g.state_dict(),
            "opt_d": state.opt_d.state_dict(),
            "vocab": list(state.vocab),
            "threshold_t": state.threshold_t,
            "latent_dim": state.g1.latent_dim,
            "out_size": state.g1.out_size,
            "latent_state": state.latent_gen.get_state(),
            "epoch": state.epoch,
            "loss_history": state.loss_history,
        },
        path,
    )
    return path


def load_mask_gan(path, cfg: TrainConfig | None = None) -> MaskGanState:
    payload = torch.load(Path(path), weights_only=False)
    if payload.get("kind") != "g1":
        raise ValueError(f"{path} is not a G1 checkpoint")
    cfg = cfg or TrainConfig()
    vocab = tuple(payload["vocab"])
    g1 = MaskGenerator(
        vocab_size=len(vocab),
        latent_dim=payload["latent_dim"],
        out_size=payload["out_size"],
    )
    d = PatchDiscriminator(1)
    state = MaskGanState(
        g1=g1,
        d=d,
        opt_g=torch.optim.Adam(g1.parameters(), lr=cfg.g1_lr, betas=(0.5, 0.999)),
        opt_d=torch.optim.Adam(d.parameters(), lr=cfg.g1_lr / 2, betas=(0.5, 0.999)),
        vocab=vocab,
        threshold_t=payload["threshold_t"],
        latent_gen=torch.Generator(),
        epoch=payload["epoch"],
        loss_history=payload["loss_history"],
    )
    state.g1.load_state_dict(payload["g1"])
    state.d.load_state_dict(payload["d"])
    state.opt_g.load_state_dict(payload["opt_g"])
    state.opt_d.load_state_dict(payload["opt_d"])
    state.latent_gen.set_state(payload["latent_state"])
    return state
