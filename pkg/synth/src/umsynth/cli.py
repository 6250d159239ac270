"""Command-line driver for the desk-scale synthesis pipeline.

Typical flow:
    umsynth phantom --out corpus --count 200 --seed 1
    umforge umask gen --input-dir corpus/images --out corpus/masks \
        --superpixels 128 --threshold 50
    umsynth train-g2 --corpus corpus --out g2.pt
    umsynth train-g1 --corpus corpus --out g1.pt
    umsynth infer --g1 g1.pt --g2 g2.pt --count 16 --seed 3 --out synth
    umsynth export-features --images corpus/images --task sex --scale 256 \
        --extractor sex.pt --dataset-id real --out real_256_sex.umft
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .data import load_corpus
from .features import (
    TASK_IDS,
    export_features,
    load_extractor,
    make_extractor,
    save_extractor,
    train_extractor,
)
from .fileio import load_png
from .infer import infer_v2um2i, write_triples
from .phantom import build_corpus
from .train import (
    TrainConfig,
    evaluate_segmentation_dice,
    load_checkpoint,
    load_mask_gan,
    save_checkpoint,
    save_mask_gan,
    train_annotated_generator,
    train_mask_generator,
)


def _split_labeled(corpus, labeled_fraction: float, seed: int):
    n = len(corpus.triples)
    k = max(1, int(round(labeled_fraction * n)))
    order = np.random.default_rng(seed).permutation(n)
    labeled_idx = set(order[:k].tolist())
    labeled, unlabeled = [], []
    for i, t in enumerate(corpus.triples):
        if i in labeled_idx and t.seg is not None:
            labeled.append(t)
        else:
            unlabeled.append(type(t)(name=t.name, mask=t.mask, image=t.image, seg=None,
                                     threshold_t=t.threshold_t))
    return labeled, unlabeled


def _cmd_phantom(args) -> int:
    build_corpus(args.out, count=args.count, seed=args.seed, size=args.size)
    print(args.out)
    return 0


def _cmd_train_g2(args) -> int:
    corpus = load_corpus(args.corpus)
    cfg = TrainConfig(seed=args.seed, epochs=args.epochs, warmup_epochs=args.warmup_epochs,
                      confidence_threshold=args.confidence_threshold)
    if args.labeled_fraction >= 1.0:
        labeled = [t for t in corpus.triples if t.seg is not None]
        unlabeled = []
    else:
        labeled, unlabeled = _split_labeled(corpus, args.labeled_fraction, args.seed)
    state = train_annotated_generator(labeled, unlabeled, cfg)
    save_checkpoint(args.out, state)
    dice = evaluate_segmentation_dice(state.g2, [t for t in corpus.triples if t.seg is not None])
    print(json.dumps({
        "checkpoint": str(args.out),
        "epochs": state.epoch,
        "labeled": len(labeled),
        "unlabeled": len(unlabeled),
        "train_dice_mean": float(np.mean(dice)),
        "final_losses": {k: (v[-1] if v else None) for k, v in state.loss_history.items()},
    }))
    return 0


def _cmd_train_g1(args) -> int:
    corpus = load_corpus(args.corpus, with_segs=False)
    cfg = TrainConfig(seed=args.seed, g1_epochs=args.epochs)
    state = train_mask_generator(corpus, cfg)
    save_mask_gan(args.out, state)
    print(json.dumps({
        "checkpoint": str(args.out),
        "epochs": state.epoch,
        "vocab": list(state.vocab),
        "threshold_t": state.threshold_t,
    }))
    return 0


def _cmd_infer(args) -> int:
    g1 = load_mask_gan(args.g1)
    g2 = load_checkpoint(args.g2)
    triples = infer_v2um2i(g1, g2, args.count, args.seed)
    write_triples(args.out, triples, superpixel_count_m=args.superpixels,
                  threshold_t=g1.threshold_t)
    print(json.dumps({"out": str(args.out), "count": len(triples)}))
    return 0


def _cmd_train_extractor(args) -> int:
    attrs = json.loads((Path(args.corpus) / "attributes.json").read_text(encoding="utf-8"))
    images, labels = [], []
    for name in sorted(attrs):
        images.append(load_png(Path(args.corpus) / "images" / f"{name}.png"))
        if args.task == "sex":
            labels.append(attrs[name]["aspect_group"])
        elif args.task == "age":
            labels.append(attrs[name]["lesion_group"])
        else:
            raise SystemExit(f"train-extractor supports sex/age, not {args.task}")
    model = train_extractor(args.task, images, labels, seed=args.seed, epochs=args.epochs)
    save_extractor(args.out, model, args.task)
    print(json.dumps({"checkpoint": str(args.out), "task": args.task}))
    return 0


def _cmd_export_features(args) -> int:
    paths = sorted(Path(args.images).glob("*.png"))
    if not paths:
        raise SystemExit(f"no PNG images under {args.images}")
    images = [load_png(p) for p in paths]
    if args.extractor:
        model, task_id = load_extractor(args.extractor)
        if task_id != args.task:
            raise SystemExit(f"extractor was trained for {task_id}, not {args.task}")
    else:
        model = make_extractor(args.task, seed=args.seed)
        model.eval()
    export_features(args.out, model, images, task_id=args.task, scale=args.scale,
                    dataset_id=args.dataset_id)
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="umsynth",
                                     description="Desk-scale mask-conditioned synthesis")
    sub = parser.add_subparsers(dest="command", required=True)

    phantom = sub.add_parser("phantom", help="Generate a geometric phantom corpus")
    phantom.add_argument("--out", required=True)
    phantom.add_argument("--count", type=int, default=200)
    phantom.add_argument("--seed", type=int, default=0)
    phantom.add_argument("--size", type=int, default=128)
    phantom.set_defaults(handler=_cmd_phantom)

    g2 = sub.add_parser("train-g2", help="Train the annotated-image generator")
    g2.add_argument("--corpus", required=True)
    g2.add_argument("--out", required=True)
    g2.add_argument("--seed", type=int, default=0)
    g2.add_argument("--epochs", type=int, default=8)
    g2.add_argument("--warmup-epochs", type=int, default=4)
    g2.add_argument("--labeled-fraction", type=float, default=1.0)
    g2.add_argument("--confidence-threshold", type=float, default=0.8)
    g2.set_defaults(handler=_cmd_train_g2)

    g1 = sub.add_parser("train-g1", help="Train the latent-to-mask generator")
    g1.add_argument("--corpus", required=True)
    g1.add_argument("--out", required=True)
    g1.add_argument("--seed", type=int, default=0)
    g1.add_argument("--epochs", type=int, default=30)
    g1.set_defaults(handler=_cmd_train_g1)

    infer = sub.add_parser("infer", help="Sample (image, seg, mask) triples")
    infer.add_argument("--g1", required=True)
    infer.add_argument("--g2", required=True)
    infer.add_argument("--count", type=int, default=16)
    infer.add_argument("--seed", type=int, default=0)
    infer.add_argument("--superpixels", type=int, default=128,
                       help="M recorded in emitted mask sidecars")
    infer.add_argument("--out", required=True)
    infer.set_defaults(handler=_cmd_infer)

    tx = sub.add_parser("train-extractor", help="Train a sex/age feature extractor")
    tx.add_argument("--corpus", required=True)
    tx.add_argument("--task", choices=["sex", "age"], required=True)
    tx.add_argument("--out", required=True)
    tx.add_argument("--seed", type=int, default=0)
    tx.add_argument("--epochs", type=int, default=40)
    tx.set_defaults(handler=_cmd_train_extractor)

    ex = sub.add_parser("export-features", help="Write UMFT features for a directory")
    ex.add_argument("--images", required=True)
    ex.add_argument("--task", choices=list(TASK_IDS), required=True)
    ex.add_argument("--scale", type=int, required=True)
    ex.add_argument("--dataset-id", required=True)
    ex.add_argument("--extractor", help="Extractor checkpoint (default: fixed random)")
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--out", required=True)
    ex.set_defaults(handler=_cmd_export_features)

    return parser


def run_cli(argv) -> int:
    try:
        args = build_parser().parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.handler(args)


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
