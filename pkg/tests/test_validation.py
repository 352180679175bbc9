"""Constructor guards and small accessors."""
import numpy as np
import pytest

from d2dsim import radio, spatial
from d2dsim.analytic import QuadratureSettings
from d2dsim.errors import ParameterError
from d2dsim.planner import ConstraintSpec
from d2dsim.access import SchemeSpec
from d2dsim.simkit import ExperimentConfig

from conftest import make_params


def test_quadrature_settings_require_positive_tolerances():
    with pytest.raises(ParameterError):
        QuadratureSettings(rel_tol=0.0)
    with pytest.raises(ParameterError):
        QuadratureSettings(tail_mass=1.0)


def test_system_params_guards():
    with pytest.raises(ParameterError):
        make_params(lambda_m=0.0)
    with pytest.raises(ParameterError):
        make_params(alpha=2.0)
    with pytest.raises(ParameterError):
        make_params(lambda_d=-1e-6)
    assert make_params(lambda_d=0.0).lambda_d == 0.0


def test_constraint_spec_guards():
    with pytest.raises(ParameterError):
        ConstraintSpec(mu=1.2, gamma=1.0)
    with pytest.raises(ParameterError):
        ConstraintSpec(mu=0.3, gamma=0.0)


def test_experiment_config_guards():
    params = make_params()
    with pytest.raises(ParameterError):
        ExperimentConfig(params=params, scheme=SchemeSpec(kind="no_ac"), n_realizations=0)
    with pytest.raises(ParameterError):
        ExperimentConfig(params=params, scheme=SchemeSpec(kind="no_ac"), n_jobs=0)


def test_cell_association_accessors(window):
    bs = spatial.PointSet(np.array([[100.0, 100.0], [2000.0, 2000.0]]), window)
    users = spatial.PointSet(np.array([[150.0, 100.0], [2100.0, 2000.0]]), window)
    assoc = spatial.CellAssociation(bs=bs, users=users)
    assert assoc.user_of_bs(0) == (150.0, 100.0)
    assert assoc.bs_of_user(1) == (2000.0, 2000.0)
    with pytest.raises(ParameterError):
        spatial.CellAssociation(bs=bs, users=spatial.PointSet(np.zeros((1, 2)), window))


def test_fading_table_shape_and_tags():
    with pytest.raises(ParameterError):
        radio.FadingTable(gains=np.ones((2, 2)), tx_ids=(("d2d", 0),), rx_ids=(("bs", 0),))
    table = radio.draw_fading([("d2d", 0)], [("bs", 0)], np.random.default_rng(0),
                              phase_tag=radio.ESTIMATION)
    assert table.phase_tag == radio.ESTIMATION


def test_point_set_rejects_outside_and_nonfinite(window):
    with pytest.raises(ParameterError):
        spatial.PointSet(np.array([[3000.0, 10.0]]), window)   # right edge is exclusive
    with pytest.raises(ParameterError):
        spatial.PointSet(np.array([[np.nan, 10.0]]), window)
