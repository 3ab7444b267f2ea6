"""Argument handling shared by the scripts: a named config plus ``--set`` overrides."""

import argparse
import json
from pathlib import Path

from kernel_reach import config as C


def parser(description: str, default_out: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out", type=Path, default=Path(default_out))
    p.add_argument("--seed", type=int)
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    return p


def load(name: str, args) -> C.RunConfig:
    over: dict = {}
    for text in args.overrides:
        over = C.merge(over, C.parse_override(text))
    if args.seed is not None:
        over["seed"] = args.seed
    return C.RunConfig.load(C.load_default(name), over)


def dump(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
    print(f"wrote {path}")
