import copy

import pytest

from fscp.scenario import scenario_from_dict, table1_document


def table1_with_users(users, **topology):
    doc = copy.deepcopy(table1_document())
    doc["users"] = users
    doc["topology"].update(topology)
    return scenario_from_dict(doc)


def user(uid, cell, *, file=0, dist=100.0, d=0.060):
    return {"id": uid, "cell_id": cell, "distance_m": dist, "demanded_file": file, "delay_threshold_s": d}


@pytest.fixture
def table1():
    return scenario_from_dict(table1_document())


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
