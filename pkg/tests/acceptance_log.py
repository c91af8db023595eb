"""One pass/fail line per acceptance criterion, printed after the run."""

LINES: list[str] = []


def record(number: int, ok, detail: str) -> str:
    """``ok`` is True, False, or None for a criterion that was not run."""
    status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    line = f"criterion {number:2d}: {status}  {detail}"
    LINES.append(line)
    print(line)
    return line


def order(line: str) -> int:
    return int(line.split(":")[0].split()[1])
