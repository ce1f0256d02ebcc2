"""Seed-replicated training/evaluation runs comparing model variants.

Variants:

``baseline``
    clean training, constant dropout 0.5 (the stock VGG setting)
``dct``
    DCT threshold augmentation with adaptive dropout
``dct-fixed``
    DCT threshold augmentation with constant dropout 0.5

Every variant of one seed shares the same initialization seed, and every
model is scored on identically distorted test images.
"""

from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np

from .data import Dataset
from .distortions import Kind
from .evaluate import EvalReport, evaluate
from .nn import NetworkConfig
from .train import TrainConfig, train

log = logging.getLogger(__name__)

VARIANTS = {
    "baseline": dict(augment=False, adaptive_dropout=False, fixed_dropout=0.5),
    "dct": dict(augment=True, adaptive_dropout=True),
    "dct-fixed": dict(augment=True, adaptive_dropout=False, fixed_dropout=0.5),
}


def run(train_set: Dataset, test_set: Dataset, seeds, base: TrainConfig,
        net_config: NetworkConfig, variants=("baseline", "dct", "dct-fixed"),
        profile="small", eval_seed: int = 0) -> dict[int, dict[str, EvalReport]]:
    results: dict[int, dict[str, EvalReport]] = {}
    for seed in seeds:
        results[seed] = {}
        for name in variants:
            cfg = replace(base, seed=seed, **VARIANTS[name])
            log.info("seed %d: training %s", seed, name)
            params, history = train(train_set.images, train_set.labels, net_config, cfg)
            report = evaluate(params, test_set.images, test_set.labels, profile, seed=eval_seed)
            report.meta["variant"] = name
            report.meta["train_seed"] = seed
            report.meta["final_train_accuracy"] = history.epochs[-1]["accuracy"]
            report.meta["trigger_epoch"] = history.epochs[-1]["trigger_epoch"]
            results[seed][name] = report
    return results


def blur_mean(report: EvalReport) -> float:
    return float(np.mean([report.per_family[Kind.GAUSSIAN_BLUR].mean,
                          report.per_family[Kind.MOTION_BLUR].mean]))


def trend_summary(results: dict[int, dict[str, EvalReport]], model: str = "dct",
                  reference: str = "baseline", blur_margin: float = 0.05,
                  clean_tolerance: float = 0.05) -> dict:
    """Directional checks of ``model`` against ``reference`` over seeds.

    * blur: blur-family mean beats the reference by ``blur_margin`` in a
      majority of seeds;
    * clean: seed-averaged clean accuracy within ``clean_tolerance``;
    * overall: seed-averaged overall score above the reference's.
    """
    seeds = sorted(results)
    blur_gain = [blur_mean(results[s][model]) - blur_mean(results[s][reference]) for s in seeds]
    clean_gap = float(np.mean([results[s][model].clean_accuracy - results[s][reference].clean_accuracy
                               for s in seeds]))
    overall_gap = float(np.mean([results[s][model].overall - results[s][reference].overall
                                 for s in seeds]))
    wins = sum(g >= blur_margin for g in blur_gain)
    return {
        "seeds": seeds,
        "blur_gain": blur_gain,
        "blur_wins": wins,
        "blur_ok": wins >= len(seeds) // 2 + 1,
        "clean_gap": clean_gap,
        "clean_ok": abs(clean_gap) <= clean_tolerance,
        "overall_gap": overall_gap,
        "overall_ok": overall_gap > 0,
    }


def ablation_summary(results: dict[int, dict[str, EvalReport]]) -> dict:
    """Adaptive vs constant dropout, both with DCT augmentation."""
    seeds = sorted(results)
    deltas = [results[s]["dct"].overall - results[s]["dct-fixed"].overall for s in seeds]
    wins = sum(d >= 0 for d in deltas)
    return {"seeds": seeds, "overall_delta": deltas, "wins": wins,
            "ok": wins >= len(seeds) // 2 + 1}
