"""Packages of external predicates, import resolution and active bindings.

Oracles are compiled into the process and registered here.  A package
becomes importable from a program once a manifest ``<package>.pkg`` for it
is found on the search path; the manifest lists the oracles the program
expects the package to provide, and is checked against what is actually
registered.  The standard library is always active without any import.

Manifest format::

    package mylib.strings
    oracle contains/2 ii
    oracle concat/3 iiO
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import (
    DuplicatePackagePath, ManifestError, MissingBaseOracle, PackageNotFound,
    RegistryError, ReservedName, UnknownExternalPredicate,
)
from .oracles import ExternalPredicate

log = logging.getLogger(__name__)

RESERVED = frozenset({"sum", "count", "times", "min", "max", "avg", "template"})
MANIFEST_SUFFIX = ".pkg"
DEFAULT_SEARCH_PATH = ("./lib",)

_PATH_RE = re.compile(r"[a-z][A-Za-z0-9_]*(\.[a-z][A-Za-z0-9_]*)*\Z")
_ORACLE_LINE = re.compile(r"oracle\s+([a-z][A-Za-z0-9_]*)/([0-9]+)\s+([iO]*)\s*\Z")


@dataclass
class Diagnostic:
    severity: str
    code: str
    message: str
    file: str | None = None
    line: int | None = None

    def format(self, default_file="<input>"):
        return f"{self.file or default_file}:{self.line or 0}: {self.severity}: {self.message}"

    def __str__(self):
        return self.format()


class Package:
    def __init__(self, name: str, entries: Iterable[ExternalPredicate] = ()):
        if not _PATH_RE.match(name):
            raise RegistryError(f"invalid package path {name!r}")
        self.name = name
        self.entries: dict = {}
        for entry in entries:
            self.add(entry)

    def __repr__(self):
        return f"Package({self.name!r}, {sorted(self.entries)})"

    def add(self, entry: ExternalPredicate) -> ExternalPredicate:
        entry.package = self.name
        self.entries[entry.name] = entry
        return entry

    def predicate(self, name: str, arity: int) -> ExternalPredicate:
        """Create, add and return a new external predicate (use its ``oracle`` decorator)."""
        return self.add(ExternalPredicate(name, arity))


@dataclass
class Manifest:
    package: str
    oracles: list = field(default_factory=list)  # (name, arity, pattern)
    source: Path | None = None


def parse_manifest(text: str, source=None) -> Manifest:
    lines = [ln.split("%", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("package "):
        raise ManifestError(f"{source}: first line must be 'package <dotted.path>'")
    name = lines[0].split(None, 1)[1].strip()
    if not _PATH_RE.match(name):
        raise ManifestError(f"{source}: invalid package path {name!r}")
    manifest = Manifest(name, source=source)
    for ln in lines[1:]:
        m = _ORACLE_LINE.match(ln)
        if not m:
            raise ManifestError(f"{source}: cannot parse manifest line {ln!r}")
        pred, arity, pattern = m.group(1), int(m.group(2)), m.group(3)
        if len(pattern) != arity:
            raise ManifestError(f"{source}: pattern {pattern} does not match arity of "
                                f"{pred}/{arity}")
        manifest.oracles.append((pred, arity, pattern))
    return manifest


def split_search_path(spec: str) -> list:
    """Split a semicolon-separated directory list, dropping empty parts."""
    return [p for p in spec.split(";") if p.strip()]


class Registry:
    def __init__(self, stdlib: bool = True, extras: bool = False):
        self.packages: dict = {}
        self.active: dict = {}
        self.imported: set = set()
        self.reserved = RESERVED
        self.implicit: set = set()
        self.frozen = False
        if stdlib:
            from .stdlib import stdlib as _stdlib
            for package in _stdlib():
                self.register_package(package)
                self.implicit.add(package.name)
            self._activate_implicit()
        if extras:
            from .stdlib import extra_packages
            for package in extra_packages():
                self.register_package(package)

    def _activate_implicit(self):
        self.active = {}
        for name in sorted(self.implicit):
            self.active.update(self.packages[name].entries)

    def register_package(self, package: Package) -> "Registry":
        if self.frozen:
            raise RegistryError("registry is frozen after import resolution")
        if package.name in self.packages:
            raise DuplicatePackagePath(f"package {package.name} is already registered")
        for entry in package.entries.values():
            if entry.name in self.reserved:
                raise ReservedName(f"#{entry.name} is reserved and cannot be defined "
                                   f"(package {package.name})")
            try:
                entry.validate()
            except MissingBaseOracle as exc:
                raise MissingBaseOracle(f"{exc} in package {package.name}") from None
        self.packages[package.name] = package
        return self

    # -- imports --------------------------------------------------------------

    def _find_manifests(self, directive, search_path):
        """Manifests matching ``directive``, first directory wins per package."""
        found = {}
        seen = set()
        stem = directive.dotted
        for directory in search_path:
            d = Path(directory)
            if not d.is_dir():
                continue
            candidates = [d / f"{stem}{MANIFEST_SUFFIX}"]
            if directive.wildcard:
                candidates += sorted(d.glob(f"{stem}.*{MANIFEST_SUFFIX}"))
            elif len(directive.path) > 1:
                # "a.b.name" may also select predicate "name" of package "a.b".
                parent = ".".join(directive.path[:-1])
                candidates.append(d / f"{parent}{MANIFEST_SUFFIX}")
            for path in candidates:
                if path.name not in seen and path.is_file():
                    seen.add(path.name)
                    manifest = parse_manifest(path.read_text(encoding="utf-8"), path)
                    found.setdefault(manifest.package, manifest)
        return found

    def _check_manifest(self, manifest, line):
        package = self.packages.get(manifest.package)
        if package is None:
            raise ManifestError(f"{manifest.source}: package {manifest.package} is not "
                                f"available in this build", line)
        for pred, arity, pattern in manifest.oracles:
            entry = package.entries.get(pred)
            if entry is None or entry.arity != arity or pattern not in entry.oracles:
                raise ManifestError(f"{manifest.source}: package {manifest.package} does not "
                                    f"provide oracle {pred}/{arity} {pattern}", line)
        return package

    def _select(self, directive, available):
        """Entries selected by one directive out of the available packages."""
        stem = directive.dotted
        if directive.wildcard:
            names = [n for n in sorted(available) if n == stem or n.startswith(stem + ".")]
            return [(available[n], list(available[n].entries.values())) for n in names]
        if stem in available:
            return [(available[stem], list(available[stem].entries.values()))]
        parent = ".".join(directive.path[:-1])
        pred = directive.path[-1]
        if parent in available and pred in available[parent].entries:
            return [(available[parent], [available[parent].entries[pred]])]
        return []

    def resolve_imports(self, imports, search_path=DEFAULT_SEARCH_PATH) -> list:
        """Activate the packages named by ``imports``; returns warnings.

        A later directive overrides an earlier binding of the same predicate
        name and a ``PredicateShadowed`` warning names both packages.
        """
        self.frozen = True
        self._activate_implicit()
        self.imported = set(self.implicit)
        warnings = []
        search_path = list(search_path)
        for directive in imports:
            if getattr(directive, "keyword", "import") == "include":
                warnings.append(Diagnostic(
                    "warning", "DeprecatedInclude",
                    "#include is deprecated, use #import", directive.file, directive.line))
            available = {}
            for manifest in self._find_manifests(directive, search_path).values():
                package = self._check_manifest(manifest, directive.line)
                available[package.name] = package
            for name in self.implicit:
                available.setdefault(name, self.packages[name])
            selected = self._select(directive, available)
            if not selected:
                raise PackageNotFound(str(directive)[len("#import "):], search_path,
                                      directive.line)
            for package, entries in selected:
                self.imported.add(package.name)
                for entry in entries:
                    previous = self.active.get(entry.name)
                    if previous is not None and previous is not entry:
                        warnings.append(Diagnostic(
                            "warning", "PredicateShadowed",
                            f"#{entry.name} from package {package.name} shadows "
                            f"#{entry.name} from package {previous.package}",
                            directive.file, directive.line))
                    self.active[entry.name] = entry
        for w in warnings:
            log.debug("%s", w)
        return warnings

    # -- lookup ---------------------------------------------------------------

    def lookup(self, atom) -> ExternalPredicate:
        """The entry an external atom is bound to (qualified atoms bypass the active map)."""
        shown = "#" + atom.qualified_name
        if atom.package:
            package = self.packages.get(atom.package)
            if package is None or atom.package not in self.imported:
                raise UnknownExternalPredicate(
                    f"{shown}: package {atom.package} is not imported")
            entry = package.entries.get(atom.predicate)
        else:
            entry = self.active.get(atom.predicate)
        if entry is None:
            raise UnknownExternalPredicate(f"unknown external predicate {shown}")
        if entry.arity != atom.arity:
            raise UnknownExternalPredicate(
                f"{shown} used with arity {atom.arity}, but #{entry.name} "
                f"from {entry.package} has arity {entry.arity}")
        return entry

    def entries(self):
        """All registered entries across packages."""
        for package in self.packages.values():
            yield from package.entries.values()

    def reset_caches(self):
        for entry in self.entries():
            entry.reset()

    def list_builtins(self) -> str:
        lines = []
        for name in sorted(self.active):
            entry = self.active[name]
            pats = ", ".join(p + ("*" if "O" not in p else "") for p in entry.patterns())
            lines.append(f"#{entry.name}/{entry.arity} {entry.package} [{pats}]")
        return "\n".join(lines) + ("\n" if lines else "")


def search_path_from_env(cli_path=None, env=None) -> list:
    env = os.environ if env is None else env
    path = split_search_path(cli_path) if cli_path else list(DEFAULT_SEARCH_PATH)
    extra = env.get("ORACLELOG_PATH")
    if extra:
        path = split_search_path(extra) + path
    return path
