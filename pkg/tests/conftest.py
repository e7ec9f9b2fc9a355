from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import pytest

from dyncqe.core import ABox, CQEInstance
from dyncqe.parser import (
    Signature, parse_abox, parse_bucq, parse_policy, parse_queries, parse_tbox,
)

DATA = Path(__file__).parent / "data"


@dataclass
class Fixture:
    name: str
    instance: CQEInstance
    queries: list
    sig: Signature

    @property
    def tbox(self):
        return self.instance.tbox

    @property
    def policy(self):
        return self.instance.policy

    @property
    def abox(self):
        return self.instance.abox

    @property
    def spec(self):
        return self.instance.spec

    def paths(self) -> dict:
        return {ext: DATA / f"{self.name}.{ext}" for ext in ("tbox", "policy", "abox", "bucq")}

    def q(self, text: str):
        return parse_bucq(text if text.startswith("ASK") else "ASK " + text, self.sig)

    def atoms(self, *texts) -> ABox:
        return parse_abox("\n".join(texts), self.sig)


def load_fixture(name: str) -> Fixture:
    sig = Signature()
    read = lambda ext: (DATA / f"{name}.{ext}").read_text()
    tbox = parse_tbox(read("tbox"), sig)
    policy = parse_policy(read("policy"), sig)
    abox = parse_abox(read("abox"), sig)
    queries = parse_queries(read("bucq"), sig)
    return Fixture(name, CQEInstance(tbox, policy, abox), queries, sig)


@pytest.fixture
def ex1() -> Fixture:
    return load_fixture("ex1")


@pytest.fixture
def ex2() -> Fixture:
    return load_fixture("ex2")


EX1_CENSORS = {
    "C1": ("buy(john,m_a)", "buy(alice,m_b)"),
    "C2": ("buy(john,m_a)", "contain(m_b,phenytoin)"),
    "C3": ("Abc(m_a)", "Antiseizure(m_a)", "buy(alice,m_b)"),
    "C4": ("Abc(m_a)", "Antiseizure(m_a)", "contain(m_b,phenytoin)"),
}

EX2_CENSORS = {
    "C1": ("C(a1)", "C(a2)"),
    "C2": ("C(a1)", "D(a2)"),
    "C3": ("D(a1)", "C(a2)"),
    "C4": ("D(a1)", "D(a2)"),
}


def censor(fx: Fixture, table: dict, name: str) -> ABox:
    return fx.atoms(*table[name])


ACCEPTANCE: list = []


def report(line: str) -> None:
    """Record an acceptance verdict; shown again in the terminal summary."""
    print(line)
    ACCEPTANCE.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
