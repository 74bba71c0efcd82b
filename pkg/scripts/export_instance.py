#!/usr/bin/env python3
"""
Export the mesh, stiffness/mass matrices and first eigenpair of one offset as
plain text, for inspection or plotting outside the lab.

    python scripts/export_instance.py --config run.json --t 0.75 --dir out/
"""

import argparse
import os
import sys

SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
REPO_ROOT = os.path.dirname(SCRIPT_DIR)
if REPO_ROOT not in sys.path:
    sys.path.insert(0, REPO_ROOT)

from console import console
from eig.instance import solve_instance
from eig.solver import export_eigenpair
from fem.assembly import export_matrix
from geometry.mesh import conformity_audit, export_mesh
from lab.config import load_config
from lab.sweep import problem_from_config


def main():
    parser = argparse.ArgumentParser(description="Export one solved offset as text files.")
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--t", type=float, default=None, help="offset (defaults to the config's t)")
    parser.add_argument("--h", type=float, default=None, help="mesh size (defaults to the config's h)")
    parser.add_argument("--dir", default="export", help="output directory")
    args = parser.parse_args()

    config = load_config(args.config)
    t = config.t if args.t is None else args.t
    h = config.h if args.h is None else args.h
    inst = solve_instance(problem_from_config(config).at(t), h, tol=config.tol)
    audit = conformity_audit(inst.mesh)

    stem = f"t{t:.6g}_h{h:g}"
    paths = [
        export_mesh(inst.mesh, os.path.join(args.dir, f"mesh_{stem}.txt")),
        export_matrix(inst.system.K, os.path.join(args.dir, f"stiffness_{stem}.txt")),
        export_matrix(inst.system.M_out, os.path.join(args.dir, f"mass_{stem}.txt")),
        export_eigenpair(inst.pair, os.path.join(args.dir, f"eigenpair_{stem}.txt")),
    ]
    console.print(f"[bold green]sigma = {inst.sigma:.12g}[/bold green] (audit: {audit})")
    for path in paths:
        console.print(f"  wrote {path}")


if __name__ == "__main__":
    main()
