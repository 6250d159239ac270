"""Loss terms for the multi-task semi-supervised setup."""

from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F

from .models import NUM_CLASSES


def one_hot(labels: torch.Tensor) -> torch.Tensor:
    """(B, H, W) integer labels -> (B, C, H, W) float one-hot."""
    return F.one_hot(labels.long(), NUM_CLASSES).permute(0, 3, 1, 2).float()


def soft_dice_loss(seg_logits: torch.Tensor, labels: torch.Tensor,
                   eps: float = 1e-6) -> torch.Tensor:
    """1 - mean per-class soft Dice between softmax probabilities and labels."""
    probs = torch.softmax(seg_logits, dim=1)
    target = one_hot(labels)
    dims = (0, 2, 3)
    intersection = (probs * target).sum(dims)
    denom = probs.sum(dims) + target.sum(dims)
    dice = (2.0 * intersection + eps) / (denom + eps)
    return 1.0 - dice.mean()


def segmentation_loss(seg_logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Supervised term: soft Dice plus cross entropy."""
    return soft_dice_loss(seg_logits, labels) + F.cross_entropy(seg_logits, labels.long())


def masked_pseudo_loss(seg_logits: torch.Tensor, pseudo_labels: torch.Tensor,
                       confidence: torch.Tensor, threshold: float) -> torch.Tensor:
    """Cross entropy on pseudo-labels, restricted to confident pixels.

    Pixels with confidence below the threshold are excluded from the mean and
    contribute exactly zero gradient.
    """
    trusted = (confidence >= threshold).float()
    ce = F.cross_entropy(seg_logits, pseudo_labels.long(), reduction="none")
    denom = trusted.sum().clamp_min(1.0)
    return (ce * trusted).sum() / denom


def lsgan_d_loss(d_real: torch.Tensor, d_fake: torch.Tensor) -> torch.Tensor:
    return 0.5 * (((d_real - 1.0) ** 2).mean() + (d_fake**2).mean())


def lsgan_g_loss(d_fake: torch.Tensor) -> torch.Tensor:
    return ((d_fake - 1.0) ** 2).mean()


class PerceptualLoss(nn.Module):
    """L1 distance in a fixed convolutional feature space."""

    def __init__(self, feature_net: nn.Module):
        super().__init__()
        self.feature_net = feature_net

    def forward(self, synth: torch.Tensor, real: torch.Tensor) -> torch.Tensor:
        return F.l1_loss(self.feature_net(synth), self.feature_net(real))
