import shutil
import subprocess

import pytest

from umsynth import build_corpus, load_corpus

UMFORGE = shutil.which("umforge")


def generate_masks(corpus_dir, superpixels=128, threshold=50):
    """Produce unsupervised masks through the mask toolchain CLI."""
    subprocess.run(
        [
            UMFORGE,
            "--workdir", str(corpus_dir),
            "--parallelism", "2",
            "umask", "gen",
            "--input-dir", "images",
            "--out", "masks",
            "--superpixels", str(superpixels),
            "--threshold", str(threshold),
        ],
        check=True,
        capture_output=True,
    )


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """66 phantoms with masks; shared by the fast unit tests."""
    root = tmp_path_factory.mktemp("corpus66")
    build_corpus(root, count=66, seed=5)
    generate_masks(root)
    return load_corpus(root)
