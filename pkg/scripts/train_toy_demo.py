#!/usr/bin/env python3
"""Train the toy evidential classifier on two Gaussian blobs and report
how vacuity separates the data region from far-away probe points."""

import argparse
import json

from vacuitylab import ToyTrainConfig, TrainingMode, generate_toy_classification, train_toy


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mode", choices=[m.value for m in TrainingMode], default="edl")
    parser.add_argument("--steps", type=int, default=500)
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--n-per-class", type=int, default=250)
    parser.add_argument("--separation", type=float, default=6.0)
    args = parser.parse_args()

    points, labels = generate_toy_classification(args.n_per_class, args.separation, args.seed)
    config = ToyTrainConfig(mode=TrainingMode(args.mode), steps=args.steps, seed=args.seed)
    result = train_toy(config, points, labels)
    print(json.dumps(result.summary, indent=2))


if __name__ == "__main__":
    main()
