"""Pipeline configuration: a sectioned INI file parsed into dataclasses.

Schema::

    [pipeline]
    seed = 2087                 ; required whenever a policy uses "mask"
    split = 0.8                 ; train fraction, in (0, 1)

    [corpus]
    format = standoff           ; standoff | bio
    text_dir = corpus/          ; standoff: .txt directory
    ann_dir = corpus/           ; standoff: .ann directory (defaults to text_dir)
    path = corpus.bio           ; bio: input file

    [recognizer:NAME]           ; one section per recognizer
    type = crf                  ; crf | rules
    model = models/NAME.model   ; crf: where train writes and the other commands read
    use_gazetteers = true       ; crf options: l2, max_epochs, tol
    gazetteers = bundled        ; "bundled" or "name=path, name=path"
    patterns = rules.tsv        ; rules: CLASS<TAB>priority<TAB>regex file

    [assign]                    ; entity class -> recognizer name
    default = NAME
    DATE = rules

    [policy]                    ; entity class -> redact | keep | mask <masker> [k=v ...]
    default = redact
    redact_string = XXX-{cls}
    NAME = mask surrogate_name

Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .core import EntityClass
from .crf import CrfConfig
from .masking import DEFAULT_REDACT, MASKERS, REDACT, Action, MaskingConfigError, MaskPolicy

RECOGNIZER_TYPES = ("crf", "rules")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in problems))


@dataclass
class RecognizerSpec:
    name: str
    type: str
    model: Optional[Path] = None
    crf: CrfConfig = field(default_factory=CrfConfig)
    gazetteers: str = "bundled"
    patterns: Optional[Path] = None


@dataclass
class CorpusSpec:
    format: str = "standoff"
    text_dir: Optional[Path] = None
    ann_dir: Optional[Path] = None
    path: Optional[Path] = None

    def paths(self) -> tuple:
        if self.format == "bio":
            return (self.path,)
        return (self.text_dir, self.ann_dir or self.text_dir)


@dataclass
class PipelineConfig:
    recognizers: dict = field(default_factory=lambda: {"rules": RecognizerSpec("rules", "rules")})
    assignment: dict = field(default_factory=lambda: {c: "rules" for c in EntityClass})
    policy: MaskPolicy = field(default_factory=MaskPolicy)
    corpus: CorpusSpec = field(default_factory=CorpusSpec)
    seed: Optional[int] = None
    split: float = 0.8

    def validate(self) -> None:
        problems = []
        for cls in EntityClass:
            name = self.assignment.get(cls)
            if name is None:
                problems.append(f"assign.{cls.value}: no recognizer assigned")
            elif name not in self.recognizers:
                problems.append(f"assign.{cls.value}: unknown recognizer {name!r}")
        for spec in self.recognizers.values():
            if spec.type not in RECOGNIZER_TYPES:
                problems.append(f"recognizer:{spec.name}.type: unknown recognizer type {spec.type!r}")
            if spec.type == "crf" and spec.model is None:
                problems.append(f"recognizer:{spec.name}.model: crf recognizers need a model path")
        if not 0 < self.split < 1:
            problems.append(f"pipeline.split: {self.split} is not in (0, 1)")
        if self.seed is None and any(self.policy.action_for(c).kind == "mask" for c in EntityClass):
            problems.append("pipeline.seed: a seed is required when the policy masks")
        if self.corpus.format not in ("standoff", "bio"):
            problems.append(f"corpus.format: unknown format {self.corpus.format!r}")
        if problems:
            raise ConfigError(problems)


_BOOL = {"1": True, "yes": True, "true": True, "on": True, "0": False, "no": False, "false": False, "off": False}


def load_config(path=None, text: Optional[str] = None, seed: Optional[int] = None) -> PipelineConfig:
    """Parse a config file; ``None`` gives the zero-training defaults (rules + redact all).

    A non-None ``seed`` overrides the file's value.
    """
    if path is None and text is None:
        return PipelineConfig(seed=seed)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";",), interpolation=None)
    parser.optionxform = str
    base = Path(".")
    if text is None:
        path = Path(path)
        base = path.parent
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError([f"cannot read config {path}: {exc}"]) from None
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([str(exc).splitlines()[0]]) from None

    problems: list[str] = []
    cfg = PipelineConfig(recognizers={}, assignment={})

    def resolve(value: Optional[str]) -> Optional[Path]:
        return None if value is None else base / value

    if parser.has_section("pipeline"):
        sec = parser["pipeline"]
        try:
            cfg.seed = int(sec["seed"]) if "seed" in sec else None
        except ValueError:
            problems.append(f"pipeline.seed: {sec['seed']!r} is not an integer")
        try:
            cfg.split = float(sec.get("split", "0.8"))
        except ValueError:
            problems.append(f"pipeline.split: {sec['split']!r} is not a number")
    if seed is not None:
        cfg.seed = seed

    if parser.has_section("corpus"):
        sec = parser["corpus"]
        cfg.corpus = CorpusSpec(sec.get("format", "standoff"), resolve(sec.get("text_dir")),
                                resolve(sec.get("ann_dir")), resolve(sec.get("path")))

    for section in parser.sections():
        if not section.startswith("recognizer:"):
            continue
        name = section.split(":", 1)[1].strip()
        sec = parser[section]
        spec = RecognizerSpec(name, sec.get("type", "").strip(), resolve(sec.get("model")),
                              gazetteers=sec.get("gazetteers", "bundled"), patterns=resolve(sec.get("patterns")))
        try:
            use_gaz = _BOOL[sec.get("use_gazetteers", "false").strip().lower()]
            spec.crf = CrfConfig(l2=float(sec.get("l2", 1.0)), max_epochs=int(sec.get("max_epochs", 100)),
                                 tol=float(sec.get("tol", 1e-3)), use_gazetteers=use_gaz)
        except (KeyError, ValueError):
            problems.append(f"{section}: bad CRF option value")
        cfg.recognizers[name] = spec
    if not cfg.recognizers:
        cfg.recognizers = {"rules": RecognizerSpec("rules", "rules")}

    assign = dict(parser["assign"]) if parser.has_section("assign") else {}
    default = assign.pop("default", next(iter(cfg.recognizers)))
    for key, value in assign.items():
        try:
            cfg.assignment[EntityClass.parse(key)] = value.strip()
        except ValueError:
            problems.append(f"assign.{key}: unknown entity class")
    for cls in EntityClass:
        cfg.assignment.setdefault(cls, default.strip())

    actions, pdefault, redact_string = {}, REDACT, DEFAULT_REDACT
    if parser.has_section("policy"):
        for key, value in parser["policy"].items():
            try:
                if key == "redact_string":
                    redact_string = value.strip()
                elif key == "default":
                    pdefault = Action.parse(value)
                else:
                    actions[EntityClass.parse(key)] = Action.parse(value)
            except ValueError as exc:
                problems.append(f"policy.{key}: {exc}")
    for cls, action in list(actions.items()) + [(None, pdefault)]:
        if action.kind == "mask" and action.masker not in MASKERS:
            where = cls.value if cls else "default"
            problems.append(f"policy.{where}: unknown masker {action.masker!r}")
            actions.pop(cls, None)
    if pdefault.kind == "mask" and pdefault.masker not in MASKERS:
        pdefault = REDACT
    try:
        cfg.policy = MaskPolicy(actions, pdefault, redact_string)
    except MaskingConfigError as exc:
        problems.append(f"policy: {exc}")

    try:
        cfg.validate()
    except ConfigError as exc:
        problems.extend(exc.problems)
    if problems:
        raise ConfigError(problems)
    return cfg
