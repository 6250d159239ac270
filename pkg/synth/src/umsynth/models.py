"""Network definitions (deliberately small: everything trains on CPU).

G1 maps a latent vector to a categorical mask over the supercluster-value
vocabulary at a coarse grid, upsampled nearest so outputs stay piecewise
constant. G2 is an encoder / residual / decoder trunk with two heads: an
image head and a per-class segmentation head.
"""

from __future__ import annotations

import torch
from torch import nn

NUM_CLASSES = 3  # background / lung / lesion


def conv_block(cin, cout, stride=1):
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, stride=stride, padding=1),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
    )


class ResidualBlock(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.BatchNorm2d(channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.BatchNorm2d(channels),
        )
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        return self.act(x + self.body(x))


class MaskGenerator(nn.Module):
    """Latent -> logits over the value vocabulary on a coarse grid, upsampled."""

    def __init__(self, vocab_size: int, latent_dim: int = 64, out_size: int = 128,
                 coarse: int = 32, base: int = 64):
        super().__init__()
        if out_size % coarse:
            raise ValueError("out_size must be a multiple of the coarse grid")
        self.latent_dim = latent_dim
        self.out_size = out_size
        self.coarse = coarse
        self.vocab_size = vocab_size
        self.fc = nn.Linear(latent_dim, base * (coarse // 4) * (coarse // 4))
        self.base = base
        self.net = nn.Sequential(
            nn.BatchNorm2d(base),
            nn.ReLU(inplace=True),
            nn.Upsample(scale_factor=2, mode="nearest"),
            conv_block(base, base // 2),
            nn.Upsample(scale_factor=2, mode="nearest"),
            conv_block(base // 2, base // 2),
            nn.Conv2d(base // 2, vocab_size, 3, padding=1),
        )

    def forward(self, z):
        h = self.fc(z).view(z.shape[0], self.base, self.coarse // 4, self.coarse // 4)
        logits = self.net(h)
        return nn.functional.interpolate(
            logits, size=(self.out_size, self.out_size), mode="nearest"
        )


class AnnotatedGenerator(nn.Module):
    """Mask -> (image in [0,1], segmentation logits), multi-task trunk."""

    def __init__(self, base: int = 16, residual_blocks: int = 4):
        super().__init__()
        self.encoder = nn.Sequential(
            conv_block(1, base),
            conv_block(base, base * 2, stride=2),
            conv_block(base * 2, base * 4, stride=2),
        )
        self.trunk = nn.Sequential(*[ResidualBlock(base * 4) for _ in range(residual_blocks)])
        self.decoder = nn.Sequential(
            nn.Upsample(scale_factor=2, mode="nearest"),
            conv_block(base * 4, base * 2),
            nn.Upsample(scale_factor=2, mode="nearest"),
            conv_block(base * 2, base),
        )
        self.image_head = nn.Conv2d(base, 1, 3, padding=1)
        self.seg_head = nn.Conv2d(base, NUM_CLASSES, 3, padding=1)

    def forward(self, mask):
        h = self.decoder(self.trunk(self.encoder(mask)))
        image = torch.sigmoid(self.image_head(h))
        seg_logits = self.seg_head(h)
        return image, seg_logits


class PatchDiscriminator(nn.Module):
    """Small least-squares patch discriminator."""

    def __init__(self, in_channels: int, base: int = 16):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(in_channels, base, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base, base * 2, 4, stride=2, padding=1),
            nn.BatchNorm2d(base * 2),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base * 2, base * 4, 4, stride=2, padding=1),
            nn.BatchNorm2d(base * 4),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base * 4, 1, 4, padding=1),
        )

    def forward(self, x):
        return self.net(x)


class FrozenFeatureNet(nn.Module):
    """Fixed random convolutional embedding for the perceptual loss.

    The contract is a *fixed* feature space, not a particular pretrained
    network; weights are seeded and never updated.
    """

    def __init__(self, seed: int = 711, base: int = 12):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        layers = []
        cin = 1
        for cout in (base, base * 2, base * 4):
            conv = nn.Conv2d(cin, cout, 3, stride=2, padding=1)
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=gen) * 0.2)
                conv.bias.zero_()
            layers += [conv, nn.ReLU(inplace=True)]
            cin = cout
        self.net = nn.Sequential(*layers)
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, x):
        return self.net(x)


def _plain_block(cin, cout, stride=1):
    # norm-free: batch statistics would be unstable at these corpus sizes
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, stride=stride, padding=1),
        nn.ReLU(inplace=True),
    )


class FeatureExtractor(nn.Module):
    """Conv backbone with global pooling: 64-d features plus a class head.

    Inputs in [0, 1] are centered to [-1, 1] internally.
    """

    def __init__(self, num_classes: int, feature_dim: int = 64, base: int = 12):
        super().__init__()
        self.backbone = nn.Sequential(
            _plain_block(1, base, stride=2),
            _plain_block(base, base * 2, stride=2),
            _plain_block(base * 2, base * 4, stride=2),
            nn.AdaptiveAvgPool2d(1),
        )
        self.project = nn.Linear(base * 4, feature_dim)
        self.classify = nn.Linear(feature_dim, num_classes)

    def features(self, x):
        h = self.backbone(x * 2.0 - 1.0).flatten(1)
        return self.project(h)

    def forward(self, x):
        return self.classify(torch.relu(self.features(x)))
