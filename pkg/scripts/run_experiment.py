#!/usr/bin/env python3
"""Run the whole pipeline (tune, evaluate, explain, report) for a config.

Equivalent to chaining the CLI commands; handy for one-shot experiments:

    python scripts/run_experiment.py --config demo/config.json --strategies 1 2 3
"""

import argparse

from wqpanel.cli import main as cli_main


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True)
    parser.add_argument("--strategies", type=int, nargs="+", default=[1, 2, 3],
                        choices=(1, 2, 3))
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--skip-explain", action="store_true")
    args = parser.parse_args()

    base = ["--config", args.config]
    if args.jobs is not None:
        base += ["--jobs", str(args.jobs)]

    steps = [["ingest", *base], ["stats", *base]]
    for strategy in args.strategies:
        steps.append(["tune", *base, "--strategy", str(strategy)])
        steps.append(["evaluate", *base, "--strategy", str(strategy)])
    steps.append(["report", *base])

    for step in steps:
        print(f"\n== wqpanel {' '.join(step)}")
        code = cli_main(step)
        if code != 0:
            raise SystemExit(code)

    if not args.skip_explain:
        # explain the boosted model for the last strategy run, when present
        from wqpanel.run_config import load_run_config

        cfg = load_run_config(args.config)
        strategy = args.strategies[-1]
        for family in ("gbdt_goss", "gbdt", "elastic_net"):
            model = cfg.output_dir / "models" / f"model_strategy{strategy}_{family}.json"
            if model.exists():
                step = ["explain", *base, "--model", str(model)]
                print(f"\n== wqpanel {' '.join(step)}")
                code = cli_main(step)
                if code != 0:
                    raise SystemExit(code)
                ranking = (cfg.output_dir / "shap_mean_abs.csv").read_text()
                print(ranking)
                break
        code = cli_main(["report", *base])
        if code != 0:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
