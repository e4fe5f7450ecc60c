"""Nine-sign road catalog, a synthetic renderer for it and the assembled colour+shape pipeline."""
import pathlib
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pydantic
from pydantic import BaseModel, BaseConfig, Field

from featguard.augment import AugmentedClassifier, ToyBaseClassifier, shared_pairs
from featguard.common.errors import ConfigurationError
from featguard.composition.catalog_file import save_catalog
from featguard.composition.compose import ComposedClassifier, MappingClassifier, parallel_compose
from featguard.composition.mapping import MappingTable, build_mapping, selectivity
from featguard.core.certificate import ResilienceCertificate
from featguard.core.labels import LabelSet
from featguard.core.space import DistortionBudget, NormKind
from featguard.extractors.base import certify_composed
from featguard.extractors.color import ColorPalette, DEFAULT_BACKGROUND_TOLERANCE, DominantColorExtractor
from featguard.extractors.image import ImageInput, ImageSpace, write_ppm
from featguard.extractors.shape import DEFAULT_THRESHOLD, SHAPE_NAMES, ShapeExtractor, ShapeTemplateSet, rasterize

SIGN_NAMESPACE = "sign"
DEFAULT_NOISE = 0.02
MIN_SIZE = 16

SIGN_ORDER = (
    "Stop", "Yield", "Do Not Enter", "Left Turn Ahead", "Right Turn Ahead",
    "No Pedestrians", "Speed Limit 25", "Speed Limit 45", "Hospital",
)

# fixed attributes come first; the rest complete the catalog from the MUTCD sign shapes and colours
FIXED_ATTRIBUTES: Dict[str, Tuple[Optional[str], Optional[str]]] = {
    "Stop": ("Red", "Octagon"),
    "Yield": ("Red", None),
    "Do Not Enter": ("Red", None),
    "Left Turn Ahead": ("Yellow", "Diamond"),
    "Right Turn Ahead": ("Yellow", "Diamond"),
    "No Pedestrians": (None, "Square"),
    "Hospital": ("Blue", "Square"),
}
DEFAULT_ATTRIBUTES: Dict[str, Tuple[str, str]] = {
    "Stop": ("Red", "Octagon"),
    "Yield": ("Red", "Triangle"),
    "Do Not Enter": ("Red", "Circle"),
    "Left Turn Ahead": ("Yellow", "Diamond"),
    "Right Turn Ahead": ("Yellow", "Diamond"),
    "No Pedestrians": ("White", "Square"),
    "Speed Limit 25": ("White", "Rectangle"),
    "Speed Limit 45": ("White", "Rectangle"),
    "Hospital": ("Blue", "Square"),
}


class SignSpec(BaseModel):
    index: int = Field(..., ge=0)
    name: str
    color: str
    shape: str

    class Config(BaseConfig):
        extra = pydantic.Extra.forbid
        allow_mutation = False


class SignCatalog:
    def __init__(self, specs: Sequence[SignSpec], colors: Sequence[str], shapes: Sequence[str]):
        self.specs: Tuple[SignSpec, ...] = tuple(sorted(specs, key=lambda spec: spec.index))
        if [spec.index for spec in self.specs] != list(range(len(self.specs))):
            raise ConfigurationError("sign indexes must run from 0 without gaps")

        labels = LabelSet([spec.name for spec in self.specs], namespace=SIGN_NAMESPACE)
        self.color_set = LabelSet(list(colors), namespace="color")
        self.shape_set = LabelSet(list(shapes), namespace="shape")
        self.mapping: MappingTable = build_mapping(
            [(labels.label(spec.name), (self.color_set.label(spec.color), self.shape_set.label(spec.shape)))
             for spec in self.specs],
            feature_sets=[self.color_set, self.shape_set],
        )

    @classmethod
    def from_mapping(cls, mapping: MappingTable) -> "SignCatalog":
        """Catalog read from a file: columns must be ``color`` then ``shape``."""
        if mapping.columns != ("color", "shape"):
            raise ConfigurationError("sign catalogs need the columns color, shape; got {value}",
                                     value=", ".join(mapping.columns))

        specs = [SignSpec(index=label.id, name=label.name, color=color.name, shape=shape.name)
                 for label, (color, shape) in mapping.catalog.items()]
        return cls(specs, mapping.feature_sets[0].names, mapping.feature_sets[1].names)

    @property
    def labels(self) -> LabelSet:
        return self.mapping.labels

    def __len__(self):
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)

    def spec(self, name: str) -> SignSpec:
        return self.specs[self.labels.label(name).id]

    def color_only(self) -> MappingTable:
        return self.mapping.project([0])

    def selectivity(self, color_only: bool = False) -> float:
        return selectivity(self.color_only() if color_only else self.mapping)


def default_catalog(attributes: Optional[Mapping[str, Tuple[str, str]]] = None,
                    colors: Sequence[str] = ("Red", "Yellow", "Blue", "White"),
                    shapes: Sequence[str] = SHAPE_NAMES) -> SignCatalog:
    """The nine signs in their fixed order; ``attributes`` may override completions but not fixed facts."""
    merged = dict(DEFAULT_ATTRIBUTES)
    for name, (color, shape) in (attributes or {}).items():
        if name not in merged:
            raise ConfigurationError("unknown sign {label}", label=name)

        fixed_color, fixed_shape = FIXED_ATTRIBUTES.get(name, (None, None))
        if fixed_color not in (None, color) or fixed_shape not in (None, shape):
            raise ConfigurationError("attributes of {label} are fixed to {value}", label=name,
                                     value=FIXED_ATTRIBUTES[name])
        merged[name] = (color, shape)

    specs = [SignSpec(index=i, name=name, color=merged[name][0], shape=merged[name][1])
             for i, name in enumerate(SIGN_ORDER)]
    return SignCatalog(specs, colors, shapes)


def render_sign(spec: SignSpec, size: int = 32, seed: int = 0, palette: ColorPalette = ColorPalette(),
                noise: float = DEFAULT_NOISE) -> ImageInput:
    """Template filled with the sign colour on the background, plus seeded uniform noise, quantized to 8 bits."""
    if size < MIN_SIZE:
        raise ConfigurationError("signs render at {value} pixels or more", value=MIN_SIZE)

    mask = rasterize(spec.shape, size)
    pixels = np.where(mask[:, :, None], np.asarray(palette.color_of(spec.color)), np.asarray(palette.background))
    rng = np.random.default_rng([seed, spec.index])
    pixels = pixels + rng.uniform(-noise, noise, size=pixels.shape)
    return ImageInput(np.clip(pixels, 0.0, 1.0)).quantized()


@dataclass
class SignPipeline:
    catalog: SignCatalog
    palette: ColorPalette
    templates: ShapeTemplateSet
    color: DominantColorExtractor
    shape: ShapeExtractor
    classifier: ComposedClassifier
    base: ToyBaseClassifier
    augmented: AugmentedClassifier

    @property
    def size(self) -> int:
        return self.templates.size

    def render(self, name: str, seed: int = 0, noise: float = DEFAULT_NOISE) -> ImageInput:
        return render_sign(self.catalog.spec(name), self.size, seed=seed, palette=self.palette, noise=noise)

    def certify(self, x, budget: DistortionBudget) -> ResilienceCertificate:
        return certify_composed([self.color, self.shape], x, budget)


def demo_pipeline(size: int = 32, catalog: Optional[SignCatalog] = None, palette: ColorPalette = ColorPalette(),
                  tolerance: float = DEFAULT_BACKGROUND_TOLERANCE, threshold: float = DEFAULT_THRESHOLD,
                  norm: NormKind = NormKind.linf) -> SignPipeline:
    catalog = catalog or default_catalog(colors=palette.names)
    missing_colors = set(catalog.color_set.names) - set(palette.names)
    if missing_colors:
        raise ConfigurationError("catalog colours {value} are not palette anchors", value=sorted(missing_colors))

    templates = ShapeTemplateSet.default(size, names=catalog.shape_set.names)
    space = ImageSpace(size, size)
    color = DominantColorExtractor(palette, tolerance=tolerance, norm=norm, space=space)
    shape = ShapeExtractor(templates, background=palette.background, threshold=threshold, norm=norm, space=space)
    classifier = parallel_compose([color, shape], MappingClassifier(catalog.mapping))

    prototypes = {catalog.labels.label(spec.name): render_sign(spec, size, palette=palette, noise=0.0)
                  for spec in catalog}
    base = ToyBaseClassifier(catalog.labels, prototypes, pairs=shared_pairs(catalog.mapping), space=space)
    return SignPipeline(catalog, palette, templates, color, shape, classifier, base,
                        AugmentedClassifier(base, classifier))


def export_renders(pipeline: SignPipeline, directory: Union[str, pathlib.Path], seed: int = 0,
                   noise: float = DEFAULT_NOISE) -> List[pathlib.Path]:
    directory = pathlib.Path(directory)
    paths = []
    for spec in pipeline.catalog:
        path = directory / f"{spec.index}_{spec.name.lower().replace(' ', '_')}.ppm"
        write_ppm(pipeline.render(spec.name, seed=seed, noise=noise), path)
        paths.append(path)
    return paths


def export_catalog(catalog: SignCatalog, path: Union[str, pathlib.Path]):
    save_catalog(catalog.mapping, path)
