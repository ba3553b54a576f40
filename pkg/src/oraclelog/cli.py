"""Command-line driver: parse, resolve imports, check safety, evaluate.

Exit status: 0 success, 1 parse/import/safety error, 2 constraint
violation, 3 grounding limit exceeded or oracle failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field

from .errors import (
    ConstraintViolation, ImportResolutionError, LimitExceeded, NotStratifiable, OracleFailure,
    OracleLogError, ParseError, SafetyError,
)
from .grounder import GroundingLimits, evaluate, stratify
from .parser import parse_program
from .registry import Registry, search_path_from_env
from .safety import analyze_program
from .syntax import Program

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONSTRAINT = 2
EXIT_LIMIT = 3

MODES = ("model", "ground", "check")


@dataclass
class CliConfig:
    input_files: list
    search_path: list = field(default_factory=lambda: ["./lib"])
    mode: str = "model"
    limits: GroundingLimits = field(default_factory=GroundingLimits)
    keep_external: bool = False
    allow_unsafe_recursion: bool = False
    list_builtins: bool = False
    stdlib: bool = True

    def __post_init__(self):
        if not self.input_files and not self.list_builtins:
            raise ValueError("at least one input file is required")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")


def _location(rule, default_file):
    if rule is None:
        return default_file, 0
    return rule.file or default_file, rule.line or 0


def _emit(err, file, line, severity, message):
    print(f"{file}:{line}: {severity}: {message}", file=err)


def _load(files):
    imports = []
    rules = []
    for name in files:
        with open(name, encoding="utf-8") as fh:
            text = fh.read()
        try:
            program = parse_program(text, filename=name)
        except ParseError as exc:
            exc.file = name
            raise
        imports.extend(program.imports)
        rules.extend(program.rules)
    return Program(tuple(imports), tuple(rules))


def run(config: CliConfig, out=None, err=None, registry: Registry | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    first = config.input_files[0] if config.input_files else "<none>"
    if registry is None:
        registry = Registry(stdlib=config.stdlib, extras=True)

    def warn(diags):
        for d in diags:
            print(d.format(first), file=err)

    try:
        program = _load(config.input_files)
        warn(registry.resolve_imports(program.imports, config.search_path))
        if config.list_builtins:
            out.write(registry.list_builtins())
            if not config.input_files:
                return EXIT_OK
        try:
            analysis = analyze_program(program, registry, config.allow_unsafe_recursion)
        except SafetyError as exc:
            if config.mode == "check":
                out.write(exc.report.render())
            raise
        warn(analysis.diagnostics)
        if config.mode == "check":
            stratify(program)
            out.write(analysis.report.render())
            return EXIT_OK
        result = evaluate(program, registry, config.limits, keep_external=config.keep_external,
                          analysis=analysis)
        warn(result.warnings)
        if config.mode == "model":
            for atom in result.model_atoms():
                print(atom, file=out)
        else:
            for rule in result.ground_rules:
                print(rule, file=out)
        return EXIT_OK
    except OSError as exc:
        _emit(err, getattr(exc, "filename", None) or first, 0, "error", exc.strerror or str(exc))
        return EXIT_ERROR
    except ParseError as exc:
        _emit(err, getattr(exc, "file", first), exc.line or 0, "error",
              f"{exc.message}" + (f" (column {exc.column})" if exc.column else ""))
        return EXIT_ERROR
    except ImportResolutionError as exc:
        _emit(err, first, exc.line or 0, "error", str(exc))
        return EXIT_ERROR
    except SafetyError as exc:
        for k, verdict in sorted(exc.report.unsafe().items()):
            file, line = _location(program.rules[k], first)
            _emit(err, file, line, "error", f"rule {k + 1}: {verdict.error}: {verdict.reason}")
        return EXIT_ERROR
    except NotStratifiable as exc:
        _emit(err, first, 0, "error", str(exc))
        return EXIT_ERROR
    except ConstraintViolation as exc:
        file, line = _location(exc.rule, first)
        _emit(err, file, line, "error", str(exc))
        return EXIT_CONSTRAINT
    except OracleFailure as exc:
        file, line = _location(exc.rule, first)
        _emit(err, file, line, "error", f"oracle failure: {exc}")
        return EXIT_LIMIT
    except LimitExceeded as exc:
        _emit(err, first, 0, "error", str(exc))
        return EXIT_LIMIT
    except OracleLogError as exc:
        _emit(err, first, 0, "error", str(exc))
        return EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="oraclelog",
        description="Evaluate logic programs with externally defined predicates.")
    ap.add_argument("files", nargs="*", metavar="FILE")
    ap.add_argument("--mode", choices=MODES, default="model",
                    help="model: print the model; ground: print the ground program; "
                         "check: print the safety report (default: model)")
    ap.add_argument("--path", "-path", dest="path", default=None,
                    help="semicolon-separated directories searched for .pkg manifests "
                         "(default: ./lib)")
    ap.add_argument("--max-steps", type=int, default=GroundingLimits.max_iterations)
    ap.add_argument("--max-constants", type=int, default=GroundingLimits.max_new_constants)
    ap.add_argument("--keep-external", action="store_true",
                    help="annotate ground rules with the external atoms they passed")
    ap.add_argument("--allow-unsafe-recursion", action="store_true",
                    help="downgrade StronglyUnsafe rules to a warning")
    ap.add_argument("--list-builtins", action="store_true",
                    help="list active external predicates")
    ap.add_argument("--no-stdlib", action="store_true",
                    help="do not activate the standard library")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if not args.files and not args.list_builtins:
        ap.error("at least one input file is required")
    try:
        limits = GroundingLimits(args.max_steps, args.max_constants)
    except ValueError as exc:
        ap.error(str(exc))
    config = CliConfig(
        input_files=args.files,
        search_path=search_path_from_env(args.path),
        mode=args.mode,
        limits=limits,
        keep_external=args.keep_external,
        allow_unsafe_recursion=args.allow_unsafe_recursion,
        list_builtins=args.list_builtins,
        stdlib=not args.no_stdlib,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
