"""Reference measurements from full-scale runs of this pipeline family.

These values come from large multi-site CT corpora and full-size model
training; they are far outside what desk-scale fixtures can reproduce and
exist only as context for reading evaluation reports (the `report
--with-reference` flag prints them). None of them are test targets.
"""

REFERENCE_RESULTS = {
    # Under-segmentation error of SLIC superpixels at the default operating
    # point (mean +/- std across scans).
    "slic_under_segmentation_error": {"mean": 0.107, "std": 0.0509},
    # Normalized fidelity score (lower is better) at threshold t=50.
    "fidelity_score": {"mean": 0.43, "std": 0.38},
    # KL divergence of lesion HU histograms: intensity-guided vs
    # segmentation-guided synthesis.
    "lesion_hu_kl": {"intensity_guided": 2.21, "segmentation_guided": 4.68},
    # Compressed average-image sizes (kB): lower means more variety.
    "avg_image_kb": {"real": 276, "um2i": 399, "v2um2i": 313},
    # Lesion Dice with 300 labeled montages: baseline vs augmented.
    "lesion_dice_insufficient": {"baseline": 0.45, "augmented": 0.51},
}
