import numpy as np
import pytest
import torch

from umsynth import (
    AnnotatedGenerator,
    MaskGenerator,
    PatchDiscriminator,
    TrainConfig,
    infer_v2um2i,
    sample_masks,
    train_annotated_generator,
    train_mask_generator,
)


def test_g2_output_contract():
    torch.manual_seed(0)
    g2 = AnnotatedGenerator()
    mask = torch.rand(2, 1, 128, 128)
    image, seg_logits = g2(mask)
    assert image.shape == (2, 1, 128, 128)
    assert seg_logits.shape == (2, 3, 128, 128)
    assert image.min() >= 0.0 and image.max() <= 1.0
    probs = torch.softmax(seg_logits, dim=1)
    sums = probs.sum(dim=1)
    assert torch.all((sums - 1.0).abs() < 1e-5)


def test_g1_output_shape_and_coarseness():
    torch.manual_seed(0)
    g1 = MaskGenerator(vocab_size=5, out_size=128, coarse=32)
    z = torch.randn(3, g1.latent_dim)
    logits = g1(z)
    assert logits.shape == (3, 5, 128, 128)
    # nearest-upsampled logits are constant on 4x4 blocks
    block = logits[:, :, 0:4, 0:4]
    assert torch.all(block == block[:, :, :1, :1])


def test_discriminator_patch_output():
    d = PatchDiscriminator(1)
    out = d(torch.rand(2, 1, 128, 128))
    assert out.ndim == 4 and out.shape[0] == 2


class TestSampling:
    @pytest.fixture(scope="class")
    @staticmethod
    def g1_state(small_corpus):
        cfg = TrainConfig(seed=0, g1_epochs=2)
        return train_mask_generator(small_corpus, cfg)

    def test_masks_snap_to_vocabulary(self, g1_state, small_corpus):
        masks = sample_masks(g1_state, 4, seed=1)
        for m in masks:
            assert m.dtype == np.uint8
            assert np.all(m % small_corpus.threshold_t == 0)
            assert set(np.unique(m)) <= set(small_corpus.vocab)

    def test_latents_give_different_masks(self, g1_state):
        a, b = sample_masks(g1_state, 2, seed=2)
        assert np.count_nonzero(a != b) > 0

    def test_sampling_deterministic(self, g1_state):
        m1 = sample_masks(g1_state, 3, seed=7)
        m2 = sample_masks(g1_state, 3, seed=7)
        for a, b in zip(m1, m2):
            assert np.array_equal(a, b)

    def test_infer_pipeline(self, g1_state, small_corpus):
        cfg = TrainConfig(seed=0, epochs=1, warmup_epochs=1)
        labeled = [t for t in small_corpus.triples[:8]]
        g2_state = train_annotated_generator(labeled, [], cfg)
        assert infer_v2um2i(g1_state, g2_state, 0, seed=0) == []
        triples = infer_v2um2i(g1_state, g2_state, 2, seed=3)
        again = infer_v2um2i(g1_state, g2_state, 2, seed=3)
        assert len(triples) == 2
        for t, u in zip(triples, again):
            assert np.array_equal(t.image, u.image)
            assert np.array_equal(t.seg, u.seg)
            assert np.array_equal(t.mask, u.mask)
        assert set(np.unique(triples[0].seg)) <= {0, 1, 2}
