import sys
import json
import pathlib
from typing import List, Optional

import typer
import yaml
from natsort import natsorted
from rich.syntax import Syntax
from rich.table import Table

from featguard import version_file
from featguard.common.console import console, error_console, log_console
from featguard.common.log import configure_logging
from featguard.common.rich import RichText
from featguard.common.utils import pretty_errors
from featguard.composition.catalog_file import load_catalog
from featguard.composition.mapping import selectivity
from featguard.core.certificate import CertificateStatus
from featguard.core.space import NormKind
from featguard.model.config import PipelineConfig
from featguard.model.config_file import load_config
from featguard.model.report import RunReport
from featguard.model.settings import Settings
from featguard.service import ATTACKED, FeatguardService
from featguard.options import (config_option,
                               out_option,
                               seed_option,
                               workers_option,
                               lambda_option,
                               norm_option,
                               inputs_argument,
                               is_json_option)

app = typer.Typer(pretty_exceptions_enable=False)


def _override(config: PipelineConfig, seed: Optional[int], lam: Optional[float],
              norm: Optional[NormKind]) -> PipelineConfig:
    budget = {key: value for key, value in (("lam", lam), ("norm", norm)) if value is not None}
    update = {}
    if budget:
        update["budget"] = config.budget.copy(update=budget)
        update["campaign"] = config.campaign.copy(update=budget)

    if seed is not None:
        update["verifier"] = config.verifier.copy(update={"seed": seed})

    return config.copy(update=update)


def _service(ctx: typer.Context, config_path: Optional[pathlib.Path], seed: Optional[int] = None,
             workers: Optional[int] = None, lam: Optional[float] = None,
             norm: Optional[NormKind] = None) -> FeatguardService:
    settings = ctx.ensure_object(Settings)
    if workers is not None:
        settings.workers = workers

    return FeatguardService(settings, _override(load_config(config_path), seed, lam, norm))


def _emit(service: FeatguardService, report: RunReport, out: Optional[pathlib.Path]):
    text = service.write(report, out)
    if out is not None:
        log_console.print(RichText("report written to {path}", path=out))
        return

    if sys.stdout.isatty():
        console.print(Syntax(text, "json", background_color="default", word_wrap=True))

    else:
        typer.echo(text, nl=False)


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4g}"


def _items_table(report: RunReport) -> Table:
    table = Table(title=f"featguard {report.command}", title_justify="left")
    table.add_column("input", style="bold slate_blue3")
    table.add_column("verdict", style="bold deep_pink1")
    table.add_column("features")
    table.add_column("candidates")
    table.add_column("radius", justify="right")
    table.add_column("distance", justify="right")
    for item in report.items:
        table.add_row(item.name, item.verdict, ", ".join(item.features), item.candidates or "-",
                      _fmt(item.radius), _fmt(item.distance))
    return table


def _campaigns_table(report: RunReport) -> Table:
    table = Table(title=f"featguard {report.command}", title_justify="left")
    for column in ("theorem", "arity", "pipelines", "holds", "counterexamples", "hypothesis failures",
                   "broken", "witnessed"):
        table.add_column(column, justify="left" if column == "theorem" else "right")

    for campaign in report.campaigns:
        table.add_row(campaign.theorem, str(campaign.arity), str(campaign.pipelines), str(campaign.holds),
                      str(campaign.counterexamples), str(campaign.hypothesis_failures),
                      str(campaign.broken_pipelines), str(campaign.broken_witnessed))
    return table


@app.command()
def certify(
        ctx: typer.Context,
        inputs: Optional[List[pathlib.Path]] = inputs_argument,
        config_path: Optional[pathlib.Path] = config_option,
        out: Optional[pathlib.Path] = out_option,
        seed: Optional[int] = seed_option,
        workers: Optional[int] = workers_option,
        lam: Optional[float] = lambda_option,
        norm: Optional[NormKind] = norm_option,
):
    """Certify every input against the colour+shape pipeline."""
    with pretty_errors():
        service = _service(ctx, config_path, seed, workers, lam, norm)
        report = service.certify(inputs or [])
        log_console.print(_items_table(report))
        _emit(service, report, out)


@app.command()
def attack(
        ctx: typer.Context,
        inputs: Optional[List[pathlib.Path]] = inputs_argument,
        config_path: Optional[pathlib.Path] = config_option,
        out: Optional[pathlib.Path] = out_option,
        seed: Optional[int] = seed_option,
        workers: Optional[int] = workers_option,
        lam: Optional[float] = lambda_option,
        norm: Optional[NormKind] = norm_option,
):
    """Search for a distortion within λ that changes the extracted features."""
    with pretty_errors():
        service = _service(ctx, config_path, seed, workers, lam, norm)
        report = service.attack(inputs or [])
        log_console.print(_items_table(report))
        _emit(service, report, out)

    broken = [item.name for item in report.items
              if item.verdict == ATTACKED and item.status is CertificateStatus.certified]
    if broken:
        error_console.print(RichText("attack succeeded on certified inputs: {label}", label=", ".join(broken)))
        raise typer.Exit(1)


@app.command()
def verify_theorems(
        ctx: typer.Context,
        config_path: Optional[pathlib.Path] = config_option,
        out: Optional[pathlib.Path] = out_option,
        seed: Optional[int] = seed_option,
        workers: Optional[int] = workers_option,
        lam: Optional[float] = lambda_option,
        norm: Optional[NormKind] = norm_option,
        pipelines: Optional[int] = typer.Option(None, "-p", "--pipelines", min=1,
                                                help="Pipelines per campaign (overrides [campaign] pipelines)"),
):
    """Run the serial and parallel composition campaigns over seeded random pipelines."""
    with pretty_errors():
        service = _service(ctx, config_path, seed, workers, lam, norm)
        report = service.verify_theorems(pipelines)
        log_console.print(_campaigns_table(report))
        _emit(service, report, out)

    if report.counts.get("counterexamples", 0):
        error_console.print(RichText("{value} composition counterexamples found",
                                     value=report.counts["counterexamples"]))
        raise typer.Exit(1)


@app.command()
def demo_signs(
        ctx: typer.Context,
        directory: pathlib.Path = typer.Argument(..., help="Directory receiving the renders and catalog.csv",
                                                 file_okay=False),
        config_path: Optional[pathlib.Path] = config_option,
        out: Optional[pathlib.Path] = out_option,
        seed: Optional[int] = seed_option,
        lam: Optional[float] = lambda_option,
        norm: Optional[NormKind] = norm_option,
):
    """Render the nine road signs and run them through the pipeline and its augmentation."""
    with pretty_errors():
        service = _service(ctx, config_path, seed, None, lam, norm)
        report = service.demo_signs(directory)
        log_console.print(_items_table(report))
        for key, value in report.metrics.items():
            log_console.print(RichText("{key}: {value}", key=key, value=f"{value:.4f}"))
        _emit(service, report, out if out is not None else directory / "report.json")


@app.command()
def config(
        ctx: typer.Context,
        config_path: Optional[pathlib.Path] = config_option,
        is_json: bool = is_json_option,
):
    """Print the resolved pipeline config."""
    with pretty_errors():
        service = _service(ctx, config_path)

    to_print = service.config.json(indent=2, by_alias=True)
    if not is_json:
        to_print = yaml.safe_dump(yaml.safe_load(to_print), sort_keys=False)

    if sys.stdout.isatty():
        console.print(Syntax(to_print, "yaml" if not is_json else "json",
                             background_color="default", word_wrap=True))

    else:
        typer.echo(to_print)


@app.command()
def schema(
        model: Optional[str] = typer.Argument(None),
        dump_all: bool = typer.Option(False, '-a', '--all', help='Dump all scheme')
):
    """Print the JSON schema of the config file."""
    schema = PipelineConfig.schema(by_alias=True)

    if model is not None:
        if model not in schema['definitions']:
            error_console.print(RichText('model `{key}` does not exists', key=model))
            raise typer.Exit(1)

        console.print(Syntax(json.dumps(schema['definitions'][model], indent=2), "json",
                             background_color="default", word_wrap=True))

    else:
        if not dump_all:
            del schema['definitions']

        console.print(Syntax(json.dumps(schema, indent=2), "json",
                             background_color="default", word_wrap=True))


@app.command()
def catalog(
        path: pathlib.Path = typer.Argument(..., help="Catalog file to list", exists=True, dir_okay=False),
):
    """List a catalog file, label by label."""
    with pretty_errors():
        mapping = load_catalog(path)

    table = Table(title=str(path), title_justify="left")
    table.add_column(mapping.labels.namespace, style="bold slate_blue3")
    for column in mapping.columns:
        table.add_column(column)

    for label, features in natsorted(mapping.catalog.items(), key=lambda item: item[0].name):
        table.add_row(label.name, *(feature.name for feature in features))

    console.print(table)
    console.print(RichText("selectivity: {value}", value=f"{selectivity(mapping):.4f}"))


@app.callback(invoke_without_command=True)
def _main(
        ctx: typer.Context,
        version: Optional[bool] = typer.Option(None, '-v', '--version', help='Show version', is_eager=True),
        verbose: bool = typer.Option(False, '--verbose', help='Log debug output to stderr'),
):
    if version is not None and version:
        typer.echo(version_file.version)
        raise typer.Exit()

    settings = ctx.ensure_object(Settings)
    configure_logging("DEBUG" if verbose else settings.log_level)

    if ctx.invoked_subcommand is None:
        typer.echo(ctx.get_help())
        raise typer.Exit()


def main():
    app()


if __name__ == '__main__':
    main()
