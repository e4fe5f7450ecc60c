import pathlib
import time
from collections import Counter
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pydantic
from natsort import natsorted

from featguard import version_file
from featguard.common.errors import ConfigurationError, NoForegroundError, ReportWriteError
from featguard.common.log import get_logger
from featguard.composition.catalog_file import load_catalog
from featguard.core.certificate import CertificateStatus
from featguard.core.space import DistortionBudget, norm_of
from featguard.extractors.color import ColorPalette
from featguard.extractors.image import ImageInput, read_ppm
from featguard.model.config import PipelineConfig
from featguard.model.config_file import config_digest
from featguard.model.report import AugmentationTrace, ItemReport, RunReport, WitnessModel, dumps_report
from featguard.model.settings import Settings
from featguard.signs import SignCatalog, SignPipeline, default_catalog, demo_pipeline, export_catalog, export_renders
from featguard.verifier.attack import greedy_attack
from featguard.verifier.campaign import run_parallel_campaign, run_serial_campaign
from featguard.verifier.flip import minimal_flip

logger = get_logger(__name__)

ATTACKED = "ATTACKED"
NO_ATTACK_FOUND = "NO_ATTACK_FOUND"
NO_FOREGROUND = "NO_FOREGROUND"


class FeatguardService:
    def __init__(self, settings: Settings, config: PipelineConfig):
        self.settings = settings
        self.config = config
        self._catalog: Optional[SignCatalog] = None
        self._pipelines: Dict[int, SignPipeline] = {}

    @property
    def budget(self) -> DistortionBudget:
        return self.config.budget.budget

    @property
    def cap(self) -> int:
        return self.config.verifier.cap or self.settings.enumeration_cap

    @property
    def seed(self) -> int:
        return self.config.verifier.seed

    @property
    def palette(self) -> ColorPalette:
        try:
            return ColorPalette(anchors=self.config.color.anchors, background=self.config.color.background)

        except pydantic.ValidationError as e:
            raise ConfigurationError("invalid color section: {value}", value=e.errors()[0]["msg"])

    @property
    def catalog(self) -> SignCatalog:
        if self._catalog is None:
            if self.config.catalog.path is not None:
                self._catalog = SignCatalog.from_mapping(load_catalog(self.config.catalog.path))

            else:
                self._catalog = default_catalog(self.config.catalog.attributes, colors=self.palette.names,
                                                shapes=self.config.shape.shapes)
        return self._catalog

    def pipeline(self, size: int) -> SignPipeline:
        if size not in self._pipelines:
            self._pipelines[size] = demo_pipeline(size, catalog=self.catalog, palette=self.palette,
                                                  tolerance=self.config.color.tolerance,
                                                  threshold=self.config.shape.threshold, norm=self.budget.norm)
        return self._pipelines[size]

    def _pipeline_for(self, image: ImageInput) -> SignPipeline:
        if image.width != image.height:
            raise ConfigurationError("input images must be square, got {value}", value=f"{image.width}x{image.height}")
        return self.pipeline(image.width)

    def load_inputs(self, paths: Sequence[pathlib.Path]) -> List[Tuple[str, ImageInput]]:
        """PPM inputs in natural order; the nine demo renders when no path is given."""
        if paths:
            return [(str(path), read_ppm(path)) for path in natsorted(paths, key=str)]

        pipeline = self.pipeline(self.config.render.size)
        return [(spec.name, pipeline.render(spec.name, seed=self.seed, noise=self.config.render.noise))
                for spec in pipeline.catalog]

    def _run_report(self, command: str, started: float, **fields) -> RunReport:
        return RunReport(command=command, version=version_file.version, config_digest=config_digest(self.config),
                         seed=self.seed, budget=self.budget, elapsed_ms=(time.perf_counter() - started) * 1000,
                         **fields)

    def _certify_item(self, name: str, image: ImageInput) -> ItemReport:
        pipeline = self._pipeline_for(image)
        try:
            color = pipeline.color.extract(image, norm=self.budget.norm)
            shape = pipeline.shape.extract(image, norm=self.budget.norm)

        except NoForegroundError as e:
            return ItemReport(name=name, verdict=NO_FOREGROUND, detail=str(e))

        certificate = pipeline.certify(image, self.budget)
        return ItemReport(
            name=name,
            verdict=certificate.status.value,
            features=[color.label.name, shape.label.name],
            candidates=str(pipeline.classifier(image)),
            status=certificate.status,
            radius=certificate.radius,
            extractor_radii={"color": color.certificate.certified_radius,
                             "shape": shape.certificate.certified_radius},
        )

    def certify(self, paths: Sequence[pathlib.Path]) -> RunReport:
        started = time.perf_counter()
        items = [self._certify_item(name, image) for name, image in self.load_inputs(paths)]
        return self._run_report("certify", started, items=items, counts=dict(Counter(item.verdict for item in items)))

    def _attack_item(self, name: str, image: ImageInput) -> ItemReport:
        item = self._certify_item(name, image)
        if item.verdict == NO_FOREGROUND:
            return item

        pipeline = self._pipeline_for(image)
        space = self.config.space.image_space(image.width, image.height)
        cap = self.cap
        gamma: Optional[np.ndarray] = None
        on_grid = np.allclose(space.snap(image.vector), image.vector, rtol=0, atol=1e-9)
        if on_grid and image.width * image.height * space.channel_levels ** 3 <= cap:
            item.attack_mode = "exhaustive"
            flips = [minimal_flip(extractor, image, space, norm=self.budget.norm, cap=cap)
                     for extractor in (pipeline.color, pipeline.shape)]
            found = [flip for flip in flips if flip is not None and self.budget.admits(flip.gamma)]
            if found:
                gamma = min(found, key=lambda flip: flip.distance).gamma

        else:
            item.attack_mode = "greedy"
            gamma = greedy_attack(pipeline.classifier.features, image, self.budget, space=space,
                                  restarts=self.config.verifier.restarts, steps=self.config.verifier.steps,
                                  seed=self.seed)

        if gamma is not None:
            item.verdict = ATTACKED
            item.witness = WitnessModel(x=image.vector.tolist(), gamma=gamma.tolist())
            item.distance = norm_of(gamma, self.budget.norm)
            if item.status is CertificateStatus.certified:
                logger.error("attack on %s succeeded inside its certified radius", name)

        else:
            item.verdict = NO_ATTACK_FOUND
        return item

    def attack(self, paths: Sequence[pathlib.Path]) -> RunReport:
        started = time.perf_counter()
        items = [self._attack_item(name, image) for name, image in self.load_inputs(paths)]
        return self._run_report("attack", started, items=items, counts=dict(Counter(item.verdict for item in items)))

    def verify_theorems(self, pipelines: Optional[int] = None) -> RunReport:
        started = time.perf_counter()
        section = self.config.campaign
        cap, workers = self.cap, self.settings.resolved_workers
        grid = self.config.space.grid()
        if grid is not None and grid.size > section.max_points:
            raise ConfigurationError("space grid has {value} points, campaign max_points allows {key}",
                                     value=grid.size, key=section.max_points)

        campaigns = [run_serial_campaign(section, self.seed, cap=cap, workers=workers, pipelines=pipelines, space=grid),
                     *run_parallel_campaign(section, self.seed, cap=cap, workers=workers, pipelines=pipelines,
                                            space=grid)]
        counts = {
            "pipelines": sum(c.pipelines for c in campaigns),
            "holds": sum(c.holds for c in campaigns),
            "counterexamples": sum(c.counterexamples for c in campaigns),
            "hypothesis_failures": sum(c.hypothesis_failures for c in campaigns),
            "broken_pipelines": sum(c.broken_pipelines for c in campaigns),
            "broken_witnessed": sum(c.broken_witnessed for c in campaigns),
        }
        return self._run_report("verify-theorems", started, campaigns=campaigns, counts=counts)

    def demo_signs(self, directory: pathlib.Path) -> RunReport:
        started = time.perf_counter()
        render = self.config.render
        pipeline = self.pipeline(render.size)
        try:
            directory.mkdir(parents=True, exist_ok=True)
            export_renders(pipeline, directory, seed=self.seed, noise=render.noise)
            export_catalog(pipeline.catalog, directory / "catalog.csv")

        except OSError as e:
            raise ReportWriteError("can not write demo output to {path}: {value}", path=directory, value=e.strerror)

        items = []
        for spec in pipeline.catalog:
            image = pipeline.render(spec.name, seed=self.seed, noise=render.noise)
            item = self._certify_item(spec.name, image)
            prediction = pipeline.augmented.predict(image)
            item.augmentation = AugmentationTrace(
                base=pipeline.base.scores(image).tolist(),
                masked=prediction.probabilities,
                label=prediction.label.name if prediction.label is not None else None,
                fallback=prediction.fallback,
                abstained=prediction.abstained,
            )
            items.append(item)

        metrics = {
            "selectivity": pipeline.catalog.selectivity(),
            "color_only_selectivity": pipeline.catalog.selectivity(color_only=True),
        }
        return self._run_report("demo-signs", started, items=items, metrics=metrics,
                                counts=dict(Counter(item.verdict for item in items)))

    def write(self, report: RunReport, out: Optional[pathlib.Path]) -> str:
        text = dumps_report(report, record_timing=self.settings.record_timing)
        if out is not None:
            try:
                out.parent.mkdir(parents=True, exist_ok=True)
                out.write_text(text)

            except OSError as e:
                raise ReportWriteError("can not write report {path}: {value}", path=out, value=e.strerror)
        return text
