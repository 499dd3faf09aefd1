"""Generate the bundled alternating-bit-protocol test model.

Explores the correct protocol (sender, receiver, two bounded lossy channels)
breadth-first and writes the resulting LTS as a model file.

    python scripts/build_abp_model.py [--data-cap 2] [--ack-cap 2] [--out PATH]
"""
import argparse
import json
from pathlib import Path

from seqcover.sut import build_model_dict


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-cap", type=int, default=2)
    parser.add_argument("--ack-cap", type=int, default=2)
    parser.add_argument("--length-bound", type=int, default=None)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).resolve().parent.parent / "src/seqcover/data/abp.json")
    args = parser.parse_args()
    model = build_model_dict(args.data_cap, args.ack_cap, args.length_bound)
    args.out.write_text(json.dumps(model, indent=1) + "\n")
    print(f"{len(model['states'])} states, {len(model['transitions'])} transitions -> {args.out}")


if __name__ == "__main__":
    main()
