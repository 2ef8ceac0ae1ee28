import csv

import pytest

# (number, name, passed, detail) appended by tests/test_acceptance.py
ACCEPTANCE = []


def write_dataset(path, ds, header=True):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(["label"] + [f"x{j}" for j in range(ds.n_features)])
        for lab, row in zip(ds.labels, ds.X):
            w.writerow([int(lab)] + [repr(float(v)) for v in row])
    return path


@pytest.fixture
def dataset_csv(tmp_path):
    def make(ds, name="data.csv", header=True):
        return str(write_dataset(tmp_path / name, ds, header))
    return make


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num, name, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        tr.write_line(f"[{status}] criterion {num}: {name} | {detail}")
