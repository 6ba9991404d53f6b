"""Line-based SZZ baseline over the same visual-code file set.

Classic line-blame semantics: every line the fixing commit deleted or
modified is traced backwards through the file's (rename-followed) history to
the commit that last introduced it; those origin commits are the candidates.
Whitespace-only lines are skipped as cosmetic. Pure line additions have no
prior line to blame, so adds-only fixes yield nothing.

The backward trace maps line positions through each historical diff rather
than shelling out to ``git blame``: blame cannot disable whole-file rename
following, and the trace must honor ``follow_renames`` from the miner
config. Tests cross-check the trace against ``git blame --porcelain``.
"""

from __future__ import annotations

from dataclasses import dataclass
from difflib import SequenceMatcher

from .errors import GitError
from .gitrepo import Repository
from .miner import FixingCommit, InducingCandidate, MinerConfig, history_steps
from .pdparser import decode_patch_bytes


@dataclass(frozen=True)
class LineOrigin:
    file_path: str
    line_number: int  # 1-based, in the pre-fix version
    origin_commit: str
    line_text: str


def changed_pre_fix_lines(old_text: str, new_text: str) -> list[int]:
    """1-based old-side line numbers deleted or modified by the change,
    whitespace-only lines skipped."""
    old_lines = old_text.splitlines()
    new_lines = new_text.splitlines()
    matcher = SequenceMatcher(None, old_lines, new_lines, autojunk=False)
    numbers = []
    for tag, i1, i2, _, _ in matcher.get_opcodes():
        if tag in ("replace", "delete"):
            for i in range(i1, i2):
                if old_lines[i].strip():
                    numbers.append(i + 1)
    return numbers


def annotate(repo: Repository, path: str, before: str, line_numbers,
             follow_renames: bool = True) -> dict[int, LineOrigin | None]:
    """Origin commit of each requested pre-fix line of ``path``.

    ``None`` when the origin is unreachable (history cut at a rename with
    following disabled).
    """
    steps = history_steps(repo, path, before, follow_renames=follow_renames)
    origins: dict[int, LineOrigin | None] = {n: None for n in line_numbers}
    if not steps:
        return origins
    pre_fix_lines = _lines_at(repo, steps[0].entry.commit_id, steps[0].path_new)
    # position of each traced line in the version at the current step
    tracked = {n: n for n in line_numbers if 1 <= n <= len(pre_fix_lines)}
    for step in steps:
        if not tracked:
            break
        new_lines = _lines_at(repo, step.entry.commit_id, step.path_new)
        parent = step.entry.parents[0] if step.entry.parents else None
        old_lines = (
            _lines_at(repo, parent, step.path_old)
            if step.path_old is not None and parent is not None
            else []
        )
        matcher = SequenceMatcher(None, old_lines, new_lines, autojunk=False)
        remapped: dict[int, int] = {}
        for tag, i1, i2, j1, j2 in matcher.get_opcodes():
            for requested, position in tracked.items():
                if j1 < position <= j2:
                    if tag == "equal":
                        remapped[requested] = i1 + (position - j1)
                    else:
                        origins[requested] = LineOrigin(
                            file_path=step.path_new,
                            line_number=requested,
                            origin_commit=step.entry.commit_id,
                            line_text=pre_fix_lines[requested - 1],
                        )
        tracked = remapped
    return origins


def _lines_at(repo: Repository, rev: str, path: str) -> list[str]:
    data = repo.read_file(rev, path)
    if data is None:
        return []
    text, _ = decode_patch_bytes(data)
    return text.splitlines()


@dataclass(frozen=True)
class TextualResult:
    candidates: tuple[InducingCandidate, ...]
    failures: tuple = ()


def textual_find_inducing(repo: Repository, fixing: FixingCommit,
                          config: MinerConfig) -> TextualResult:
    """Line-blame candidates for a fixing commit's visual files."""
    try:
        parent = repo.rev_parse(f"{fixing.commit_id}^")
    except GitError:
        parent = None

    by_key: dict[tuple[str, str], InducingCandidate] = {}
    for change in fixing.visual_files:
        if change.status == "added" or parent is None:
            continue  # nothing was deleted or modified
        old_path = change.old_path if change.status == "renamed-from" else change.path
        old_text = "\n".join(_lines_at(repo, parent, old_path))
        new_text = (
            ""
            if change.status == "deleted"
            else "\n".join(_lines_at(repo, fixing.commit_id, change.path))
        )
        lines = changed_pre_fix_lines(old_text, new_text)
        if not lines:
            continue
        origins = annotate(repo, old_path, fixing.commit_id, lines,
                           follow_renames=config.follow_renames)
        for origin in origins.values():
            if origin is None or origin.origin_commit == fixing.commit_id:
                continue
            key = (origin.origin_commit, change.path)
            if key not in by_key:
                by_key[key] = InducingCandidate(
                    fixing_commit=fixing.commit_id,
                    inducing_commit=origin.origin_commit,
                    file_path=change.path,
                    matched_paths=(),
                    via_addition_reduction=False,
                    inducing_commit_time=repo.commit_time(origin.origin_commit),
                )
    return TextualResult(candidates=tuple(
        by_key[key] for key in sorted(by_key)
    ))
