"""Compare the budgeted planner against the baseline exploration strategies.

On a handful of synthetic subspace-outlier datasets, runs the planned
exploration plus exhaustive ensembling and the random baselines, then
prints mean F@N per strategy. Exhaustive executes every candidate, so
this one takes a few minutes.
"""

import tempfile
from pathlib import Path

import numpy as np

from outlier_explorer import (CorpusSpec, RunConfig, generate_synthetic_corpus,
                              run_strategy, save_csv, train_all)
from outlier_explorer.pipeline import replace_config

print("training meta models ...")
train_corpus = generate_synthetic_corpus(
    12, rng_seed=5, spec=CorpusSpec(n_range=(100, 230), m_range=(16, 30)))
bundle, _ = train_all(train_corpus, split_seed=0)

spec = CorpusSpec(n_range=(115, 135), m_range=(29, 30),
                  outlier_ratio_range=(0.05, 0.15),
                  displaced_dims_range=(2, 8), box_inflation=1.4)
corpus = generate_synthetic_corpus(4, rng_seed=31, spec=spec)
workdir = Path(tempfile.mkdtemp())

strategies = ("planned", "exhaustive", "random_subset", "random_one",
              "random_one_planned")
mean_f = {name: [] for name in strategies}
for i, dataset in enumerate(corpus):
    path = workdir / f"ds{i}.csv"
    save_csv(dataset, path)
    base = RunConfig(dataset=str(path), label_column="label", t_total=0.5,
                     gamma=700, subspace_seed=i, detector_seed=i,
                     nmf_seed=i, strategy_seed=i)
    for name in strategies:
        result = run_strategy(replace_config(base, strategy=name), bundle=bundle)
        if result.status != "completed":
            print(f"ds{i} {name}: {result.status}")
            continue
        score = np.mean([row["f"] for row in result.metric_table.values()])
        mean_f[name].append(score)
        wall = result.total_detector_wall_clock
        print(f"ds{i} {name:18s} mean F@N = {score:.3f} "
              f"({len(result.detector_results)} detectors, {wall:.2f}s)")

print("\nmean F@N over datasets:")
for name in strategies:
    if mean_f[name]:
        print(f"  {name:18s} {np.mean(mean_f[name]):.3f}")
