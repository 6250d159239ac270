import pytest
import torch

from umsynth.losses import (
    masked_pseudo_loss,
    one_hot,
    segmentation_loss,
    soft_dice_loss,
)


def test_soft_dice_perfect_prediction():
    labels = torch.randint(0, 3, (2, 16, 16))
    logits = one_hot(labels) * 50.0  # saturate softmax at the labels
    assert soft_dice_loss(logits, labels) < 1e-3


def test_soft_dice_totally_wrong_prediction():
    # classes 0 and 1 fully miss (dice 0); absent class 2 is vacuous (dice 1)
    labels = torch.zeros(1, 8, 8, dtype=torch.long)
    wrong = torch.ones(1, 8, 8, dtype=torch.long)
    logits = one_hot(wrong) * 50.0
    assert float(soft_dice_loss(logits, labels)) == pytest.approx(2.0 / 3.0, abs=1e-3)


def test_segmentation_loss_decreases_with_accuracy():
    labels = torch.randint(0, 3, (2, 16, 16))
    good = segmentation_loss(one_hot(labels) * 10.0, labels)
    bad = segmentation_loss(one_hot((labels + 1) % 3) * 10.0, labels)
    assert good < bad


class TestConfidenceMasking:
    def test_below_threshold_pixels_are_inert(self):
        # permuting pseudo-labels on untrusted pixels must not change the loss
        torch.manual_seed(0)
        logits = torch.randn(1, 3, 8, 8)
        pseudo = torch.randint(0, 3, (1, 8, 8))
        confidence = torch.rand(1, 8, 8)
        threshold = 0.6
        base = masked_pseudo_loss(logits, pseudo, confidence, threshold)
        scrambled = pseudo.clone()
        untrusted = confidence < threshold
        scrambled[untrusted] = (scrambled[untrusted] + 1) % 3
        after = masked_pseudo_loss(logits, scrambled, confidence, threshold)
        assert torch.equal(base, after)

    def test_below_threshold_pixels_have_zero_gradient(self):
        torch.manual_seed(1)
        logits = torch.randn(1, 3, 4, 4, requires_grad=True)
        pseudo = torch.randint(0, 3, (1, 4, 4))
        confidence = torch.zeros(1, 4, 4)
        confidence[0, 0, 0] = 1.0  # single trusted pixel
        loss = masked_pseudo_loss(logits, pseudo, confidence, 0.5)
        loss.backward()
        grad = logits.grad
        assert grad is not None
        assert torch.any(grad[0, :, 0, 0] != 0)
        untrusted = grad.clone()
        untrusted[0, :, 0, 0] = 0
        assert torch.all(untrusted == 0)

    def test_all_untrusted_gives_zero_loss(self):
        logits = torch.randn(1, 3, 4, 4)
        pseudo = torch.randint(0, 3, (1, 4, 4))
        loss = masked_pseudo_loss(logits, pseudo, torch.zeros(1, 4, 4), 0.5)
        assert loss == 0.0
