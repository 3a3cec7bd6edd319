"""Pass/fail ledger for the acceptance gate, echoed in the pytest summary."""

RESULTS = []


def report(name, ok, detail, informational=False):
    status = "PASS" if ok else ("WARN" if informational else "FAIL")
    line = f"{status:4s}  {name}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok
