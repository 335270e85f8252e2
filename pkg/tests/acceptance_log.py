"""Shared sink for acceptance-criterion verdict lines."""

RESULTS = []


def record(criterion, verdict, detail):
    line = f"{verdict:<4} {criterion}: {detail}"
    RESULTS.append(line)
    print(line)
