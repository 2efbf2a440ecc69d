import pytest

from adiabatic_pdm.scenarios import scenario_fig1, scenario_fig2, scenario_fig3


@pytest.fixture(scope="session")
def fig1():
    return {v: scenario_fig1(v) for v in ("adiabatic", "stretched", "counter")}


@pytest.fixture(scope="session")
def fig2():
    return {v: scenario_fig2(v) for v in ("adiabatic", "counter")}


@pytest.fixture(scope="session")
def fig3():
    return {v: scenario_fig3(v) for v in ("adiabatic", "counter", "long_adiabatic")}
