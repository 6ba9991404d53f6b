"""Repository mining: fixing-commit identification and history backtracking.

Pipeline per fixing commit and visual file:

1. Diff the file's IR across the fixing commit and project the change set to
   the configured change-depth.
2. Walk the file's first-parent history strictly before the fix, newest
   first, following renames when configured.
3. Modified/Deleted fix paths: the most recent prior commit whose own IR diff
   touched the same (truncated) path becomes a defect-inducing candidate; the
   path then retires (``all_matches`` collects every matching commit
   instead).
4. Added fix paths deeper than the node level cannot have prior changes, so
   matching retries at successively shallower depths until some commit
   touched the enclosing subtree; node-level additions yield nothing.

Unparseable file versions (hand-edited patches) are recorded as per-file
failures: the fixing side skips the file, a historical side skips that
commit and the walk continues. The time filter afterwards drops candidates
committed after the linked bug report.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from .diff import (
    MAX_DEPTH,
    ChangeKind,
    ChangePath,
    DepthMode,
    IRDiff,
    diff_ir,
    match_changes,
    path_sort_key,
    paths_at_depth,
    truncate_path,
)
from .errors import ConfigError, GitError, PatchSyntaxError
from .gitrepo import ChangedFile, LogEntry, Repository
from .ir import Language, VisualIR, empty_ir
from .maxparser import PropertyFilter, default_property_filter, parse_maxpat
from .pdparser import decode_patch_bytes, parse_pd

DEFAULT_EXTENSIONS: dict[Language, tuple[str, ...]] = {
    Language.PURE_DATA: (".pd",),
    Language.MAX_MSP: (".maxpat", ".maxhelp"),
}

DEFAULT_MESSAGE_REGEX = r"(?i)\bfix(es|ed)?\b.*#\d+"

FIXING_DETECTION_MODES = ("explicit-list", "message-regex", "both")


@dataclass(frozen=True)
class MinerConfig:
    extensions: dict[Language, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_EXTENSIONS)
    )
    depth_mode: DepthMode = MAX_DEPTH
    fixing_detection: str = "message-regex"
    message_regex: str = DEFAULT_MESSAGE_REGEX
    follow_renames: bool = True
    parallelism: int = 1
    all_matches: bool = False
    include_layout: bool = False
    property_filter: PropertyFilter = field(default_factory=default_property_filter)

    def __post_init__(self):
        if self.property_filter is None:
            object.__setattr__(self, "property_filter", default_property_filter())
        if not self.extensions or any(not exts for exts in self.extensions.values()):
            raise ConfigError("extension lists must be non-empty")
        if self.fixing_detection not in FIXING_DETECTION_MODES:
            raise ConfigError(f"unknown fixing_detection {self.fixing_detection!r}")
        if self.depth_mode != MAX_DEPTH and int(self.depth_mode) < 1:
            raise ConfigError("depth must be a positive integer or 'max'")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        try:
            re.compile(self.message_regex)
        except re.error as exc:
            raise ConfigError(f"bad message regex: {exc}")

    def effective_filter(self) -> PropertyFilter:
        return self.property_filter

    @property
    def method_tag_vc(self) -> str:
        if self.depth_mode == MAX_DEPTH:
            return "szz-vc-max"
        return f"szz-vc-depth{int(self.depth_mode)}"

    def to_dict(self) -> dict:
        return {
            "extensions": {
                lang.value: list(exts) for lang, exts in sorted(
                    self.extensions.items(), key=lambda kv: kv[0].value
                )
            },
            "depth": self.depth_mode if self.depth_mode == MAX_DEPTH
            else int(self.depth_mode),
            "fixing_detection": self.fixing_detection,
            "message_regex": self.message_regex,
            "follow_renames": self.follow_renames,
            "parallelism": self.parallelism,
            "all_matches": self.all_matches,
            "include_layout": self.include_layout,
            "property_filter": self.effective_filter().to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MinerConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be an object")
        kwargs = {}
        if "extensions" in data:
            try:
                kwargs["extensions"] = {
                    Language(lang): tuple(exts)
                    for lang, exts in data["extensions"].items()
                }
            except (ValueError, AttributeError) as exc:
                raise ConfigError(f"bad extensions table: {exc}")
        if "depth" in data:
            kwargs["depth_mode"] = parse_depth(data["depth"])
        for key in ("fixing_detection", "message_regex", "follow_renames",
                    "parallelism", "all_matches", "include_layout"):
            if key in data:
                kwargs[key] = data[key]
        if data.get("property_filter") is not None:
            kwargs["property_filter"] = PropertyFilter.from_dict(data["property_filter"])
        unknown = set(data) - {
            "extensions", "depth", "fixing_detection", "message_regex",
            "follow_renames", "parallelism", "all_matches", "include_layout",
            "property_filter",
        }
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**kwargs)


def parse_depth(value) -> DepthMode:
    if value == MAX_DEPTH:
        return MAX_DEPTH
    try:
        depth = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"depth must be a positive integer or 'max', got {value!r}")
    if depth < 1:
        raise ConfigError("depth must be >= 1")
    return depth


def language_for_path(path: str, extensions: dict[Language, tuple[str, ...]]
                      ) -> Language | None:
    lowered = path.lower()
    for language, exts in extensions.items():
        if any(lowered.endswith(ext.lower()) for ext in exts):
            return language
    return None


def parse_patch_text(text: str, language: Language, config: MinerConfig,
                     source_path: str = "") -> VisualIR:
    if language is Language.PURE_DATA:
        return parse_pd(text, include_layout=config.include_layout,
                        source_path=source_path)
    return parse_maxpat(text, prop_filter=config.effective_filter(),
                        source_path=source_path)


# ---------------------------------------------------------------------------
# Fixing commits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixingCommit:
    commit_id: str
    message: str
    linked_issue: str | None = None
    report_time: datetime | None = None
    visual_files: tuple[ChangedFile, ...] = ()


@dataclass(frozen=True)
class IssueRecord:
    issue_key: str
    fixing_commit_ids: tuple[str, ...]
    report_time: datetime | None = None
    description: str | None = None


def load_issue_links(path: str) -> list[IssueRecord]:
    """Newline-delimited JSON, one record per issue."""
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                records.append(
                    IssueRecord(
                        issue_key=raw["issue_key"],
                        fixing_commit_ids=tuple(raw["fixing_commit_ids"]),
                        report_time=parse_timestamp(raw.get("report_time")),
                        description=raw.get("description"),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"malformed issue link table at line {lineno}: {exc}")
    return records


def parse_timestamp(value) -> datetime | None:
    if value is None:
        return None
    stamp = datetime.fromisoformat(str(value).replace("Z", "+00:00"))
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def identify_fixing_commits(
    repo: Repository,
    config: MinerConfig,
    issue_links: list[IssueRecord] | None = None,
    head: str = "HEAD",
) -> list[FixingCommit]:
    """Union of explicitly linked commits and message-regex matches, keeping
    only commits that touch at least one visual-code file."""
    mode = config.fixing_detection
    if mode in ("explicit-list", "both") and issue_links is None:
        raise ConfigError("explicit-list fixing detection needs an issue-link table")

    selected: dict[str, FixingCommit] = {}
    if mode in ("message-regex", "both"):
        pattern = re.compile(config.message_regex)
        for commit_id, _, message in repo.all_commits(head):
            if pattern.search(message):
                selected[commit_id] = FixingCommit(commit_id=commit_id, message=message)
    if mode in ("explicit-list", "both"):
        for issue in issue_links or []:
            for rev in issue.fixing_commit_ids:
                try:
                    commit_id = repo.rev_parse(rev)
                except GitError as exc:
                    raise ConfigError(
                        f"issue {issue.issue_key} names unknown commit {rev}: {exc}"
                    )
                # explicit links win: they carry the report time
                selected[commit_id] = FixingCommit(
                    commit_id=commit_id,
                    message=repo.commit_message(commit_id),
                    linked_issue=issue.issue_key,
                    report_time=issue.report_time,
                )

    fixing = []
    for commit_id in sorted(selected):
        visual = tuple(
            change
            for change in repo.changed_files(commit_id)
            if language_for_path(change.path, config.extensions) is not None
        )
        if not visual:
            continue  # not suitable: no visual code touched
        fixing.append(replace(selected[commit_id], visual_files=visual))
    return fixing


# ---------------------------------------------------------------------------
# File history
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HistoryStep:
    entry: LogEntry
    path_new: str  # the file's path as of this commit
    path_old: str | None  # path on the parent side; None when the step
    # introduced the file (creation, or a rename boundary with following off)


def history_steps(repo: Repository, path: str, before: str,
                  follow_renames: bool = True) -> list[HistoryStep]:
    """Commits touching the (rename-followed) path strictly before ``before``,
    newest first, along the first-parent chain."""
    entries = repo.first_parent_log(before)
    steps: list[HistoryStep] = []
    cur = path
    for entry in entries[1:]:
        touched = next((c for c in entry.changes if c.path == cur), None)
        if touched is None:
            continue
        if touched.status == "renamed-from":
            if follow_renames:
                steps.append(HistoryStep(entry, cur, touched.old_path))
                cur = touched.old_path
            else:
                steps.append(HistoryStep(entry, cur, None))
                break
        elif touched.status == "added":
            steps.append(HistoryStep(entry, cur, None))
            break
        elif touched.status == "modified":
            steps.append(HistoryStep(entry, cur, cur))
        else:  # a deletion older than the creation boundary: stop
            break
    return steps


def file_history(repo: Repository, path: str, before: str,
                 follow_renames: bool = True) -> list[tuple[str, str]]:
    """(revision, path-at-revision) pairs strictly before ``before``."""
    steps = history_steps(repo, path, before, follow_renames=follow_renames)
    if not steps and not _existed_around(repo, path, before):
        raise GitError(f"path never existed before {before}: {path}")
    return [(step.entry.commit_id, step.path_new) for step in steps]


def _existed_around(repo: Repository, path: str, before: str) -> bool:
    if repo.read_file(before, path) is not None:
        return True
    try:
        parent = repo.rev_parse(f"{before}^")
    except GitError:
        return False
    return repo.read_file(parent, path) is not None


# ---------------------------------------------------------------------------
# Inducing candidates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InducingCandidate:
    fixing_commit: str
    inducing_commit: str
    file_path: str
    matched_paths: tuple[tuple[ChangePath, int], ...]  # (path, effective depth)
    via_addition_reduction: bool
    inducing_commit_time: datetime


@dataclass(frozen=True)
class AnalysisFailure:
    commit_id: str
    file_path: str
    reason: str


@dataclass(frozen=True)
class InducingResult:
    candidates: tuple[InducingCandidate, ...]
    failures: tuple[AnalysisFailure, ...]
    fix_diffs: dict[str, IRDiff]


class _IRLoader:
    """Per-run cache of parsed IR versions; absent files parse as empty."""

    def __init__(self, repo: Repository, language: Language, config: MinerConfig):
        self.repo = repo
        self.language = language
        self.config = config
        self._cache: dict[tuple[str, str], VisualIR] = {}

    def at(self, rev: str | None, path: str | None) -> VisualIR:
        if rev is None or path is None:
            return empty_ir(self.language, path or "")
        key = (rev, path)
        if key not in self._cache:
            data = self.repo.read_file(rev, path)
            if data is None:
                ir = empty_ir(self.language, path)
            else:
                text, _ = decode_patch_bytes(data)
                ir = parse_patch_text(text, self.language, self.config,
                                      source_path=path)
            self._cache[key] = ir
        return self._cache[key]


def find_inducing(repo: Repository, fixing: FixingCommit,
                  config: MinerConfig) -> InducingResult:
    """Backtrack every visual file of a fixing commit to its defect-inducing
    candidates (unfiltered; apply :func:`filter_candidates` afterwards)."""
    merged: dict[tuple[str, str], dict] = {}
    failures: list[AnalysisFailure] = []
    fix_diffs: dict[str, IRDiff] = {}
    for change in fixing.visual_files:
        _mine_file(repo, fixing, change, config, merged, failures, fix_diffs)

    candidates = tuple(
        InducingCandidate(
            fixing_commit=fixing.commit_id,
            inducing_commit=inducing,
            file_path=file_path,
            matched_paths=tuple(
                sorted(info["paths"], key=lambda pe: (path_sort_key(pe[0]), pe[1]))
            ),
            via_addition_reduction=info["via"],
            inducing_commit_time=info["time"],
        )
        for (inducing, file_path), info in sorted(merged.items())
    )
    for candidate in candidates:
        if candidate.inducing_commit == fixing.commit_id:
            raise AssertionError("self-blame candidate")
    return InducingResult(
        candidates=candidates, failures=tuple(failures), fix_diffs=fix_diffs
    )


def _mine_file(
    repo: Repository,
    fixing: FixingCommit,
    change: ChangedFile,
    config: MinerConfig,
    merged: dict,
    failures: list[AnalysisFailure],
    fix_diffs: dict[str, IRDiff],
) -> None:
    language = language_for_path(change.path, config.extensions)
    if language is None:
        return
    loader = _IRLoader(repo, language, config)
    try:
        parent = repo.rev_parse(f"{fixing.commit_id}^")
    except GitError:
        parent = None
    old_path = change.old_path if change.status == "renamed-from" else change.path

    try:
        old_ir = (
            empty_ir(language, change.path)
            if change.status == "added"
            else loader.at(parent, old_path)
        )
        new_ir = (
            empty_ir(language, change.path)
            if change.status == "deleted"
            else loader.at(fixing.commit_id, change.path)
        )
    except PatchSyntaxError as exc:
        failures.append(AnalysisFailure(fixing.commit_id, change.path, str(exc)))
        return

    fix_diff = diff_ir(old_ir, new_ir, old_version=parent or "",
                       new_version=fixing.commit_id)
    fix_diffs[change.path] = fix_diff
    fix_paths = paths_at_depth(fix_diff, config.depth_mode)
    md_pairs = sorted(
        (
            (path, kind)
            for path, kind in fix_paths
            if kind in (ChangeKind.MODIFIED, ChangeKind.DELETED)
        ),
        key=lambda pk: path_sort_key(pk[0]),
    )
    added_paths = sorted(
        (path for path, kind in fix_paths
         if kind is ChangeKind.ADDED and len(path) > 1),
        key=path_sort_key,
    )
    if not md_pairs and not added_paths:
        return
    if change.status == "added":
        return  # a brand-new file has no history to blame

    steps = history_steps(repo, old_path, fixing.commit_id,
                          follow_renames=config.follow_renames)
    step_diffs: list[IRDiff | None] = []
    for step in steps:
        try:
            step_old = loader.at(
                step.entry.parents[0] if step.entry.parents else None,
                step.path_old,
            )
            step_new = loader.at(step.entry.commit_id, step.path_new)
            step_diffs.append(
                diff_ir(step_old, step_new,
                        old_version=step.entry.parents[0] if step.entry.parents else "",
                        new_version=step.entry.commit_id)
            )
        except PatchSyntaxError as exc:
            failures.append(
                AnalysisFailure(step.entry.commit_id, step.path_new, str(exc))
            )
            step_diffs.append(None)  # skipped; matching continues further back

    def emit(step: HistoryStep, path: ChangePath, depth: int, via: bool) -> None:
        key = (step.entry.commit_id, change.path)
        info = merged.setdefault(
            key, {"paths": set(), "via": False, "time": step.entry.commit_time}
        )
        info["paths"].add((path, depth))
        info["via"] = info["via"] or via

    # Modified/Deleted fix paths: most recent prior matching commit per path.
    active = list(md_pairs)
    for step, step_diff in zip(steps, step_diffs):
        if step_diff is None or not active:
            continue
        matched = match_changes(active, step_diff, config.depth_mode)
        for path in sorted(matched, key=path_sort_key):
            emit(step, path, len(path), via=False)
        if not config.all_matches:
            active = [(p, k) for p, k in active if p not in matched]

    # Added fix paths: go up change-depths until some prior commit touched
    # the enclosing subtree; a depth-1 addition is a new node, never blamed.
    for path in added_paths:
        for depth in range(len(path) - 1, 0, -1):
            target = truncate_path(path, depth)
            hits = []
            for step, step_diff in zip(steps, step_diffs):
                if step_diff is None:
                    continue
                truncated = {truncate_path(p, depth) for p in step_diff.paths()}
                if target in truncated:
                    hits.append(step)
                    if not config.all_matches:
                        break
            if hits:
                for step in hits:
                    emit(step, path, depth, via=True)
                break


@dataclass(frozen=True)
class FilterOutcome:
    kept: tuple[InducingCandidate, ...]
    dropped: tuple[InducingCandidate, ...]
    unfiltered: bool  # True when no report time was available to filter by


def filter_candidates(candidates, fixing: FixingCommit) -> FilterOutcome:
    """Drop candidates committed after the linked bug report was filed."""
    candidates = tuple(candidates)
    if fixing.report_time is None:
        return FilterOutcome(kept=candidates, dropped=(), unfiltered=True)
    kept, dropped = [], []
    for candidate in candidates:
        if candidate.inducing_commit_time > fixing.report_time:
            dropped.append(candidate)
        else:
            kept.append(candidate)
    return FilterOutcome(kept=tuple(kept), dropped=tuple(dropped), unfiltered=False)
