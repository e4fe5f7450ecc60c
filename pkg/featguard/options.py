import pathlib
from typing import List, Optional

import typer

from featguard.core.space import NormKind

config_option: Optional[pathlib.Path] = typer.Option(
    None, "-c", "--config", help="Pipeline config: `[section]` / `key = value` lines, or a .yaml file",
    exists=True, dir_okay=False)
out_option: Optional[pathlib.Path] = typer.Option(None, "-o", "--out", help="Write the JSON report to this path",
                                                  dir_okay=False)
seed_option: Optional[int] = typer.Option(None, "-s", "--seed", help="Top-level seed for every random choice")
workers_option: Optional[int] = typer.Option(None, "-w", "--workers", min=1,
                                             help="Enumeration worker threads (default: available parallelism)")
lambda_option: Optional[float] = typer.Option(None, "-l", "--lambda", min=0.0, help="Distortion bound λ")
norm_option: Optional[NormKind] = typer.Option(None, "-n", "--norm", help="Norm measuring the distortion")
inputs_argument: Optional[List[pathlib.Path]] = typer.Argument(
    None, help="PPM images to process (default: the nine rendered demo signs)", exists=True, dir_okay=False)
is_json_option: bool = typer.Option(False, '-j', '--json', help='Output in json format')
