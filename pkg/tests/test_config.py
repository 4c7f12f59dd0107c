import pytest
from pydantic import ValidationError

from config.presets import PRESETS, get_preset, preset_names
from config.scenario_file import ScenarioConfig, apply_overrides, load_scenario, parse_scenario_text
from config.settings import Settings
from services.channel import PathLossModel
from services.exceptions import ScenarioConfigError
from services.rate import RateKind
from services.solver import PlanMethod

UMA_PRESET_DUMP = """n_relays=4
spacing_m=200.0
access_range_m=100.0
pathloss_model=uma-nlos
fc_ghz=28.0
backhaul_gain_dbi=50.0
access_gain_dbi=25.0
pb_w=1.0
pa_w=1.0
noise_figure_db=9.0
access_reuse=2
tx_height_m=10.0
rx_height_m=1.5
rate_model=ideal
tx_element_gain_dbi=8.0
rx_n_h=1
rx_n_v=1
rx_element_gain_dbi=5.0
asd_deg=0.0
zsd_deg=0.0
r_star_bps=1180000000.0
r_star_grid_bps=1180000000.0
methods=optimal
"""


def test_preset_names():
    assert preset_names() == ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8"]


def test_fig7_preset_dump():
    assert get_preset("fig7").dump() == UMA_PRESET_DUMP


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_dump_parses_back(name):
    preset = get_preset(name)
    assert parse_scenario_text(preset.dump()).model_dump() == preset.model_dump()


def test_default_scenario():
    config = ScenarioConfig()
    scenario = config.to_scenario()
    assert scenario.positions == (200.0, 400.0, 600.0, 800.0)
    assert scenario.ranges == (100.0,) * 5
    assert (scenario.pb_w, scenario.pa_w) == (1.0, 1.0)
    assert (scenario.backhaul_joint_gain_dbi, scenario.access_joint_gain_dbi) == (50.0, 25.0)
    assert scenario.noise_figure_db == 9.0
    assert scenario.access_reuse == 2


def test_preset_captions():
    assert get_preset("fig3").pathloss_model is PathLossModel.LOS_PLUS_25
    assert PlanMethod.DIRECT in get_preset("fig3").methods
    assert get_preset("fig4").pathloss_model is PathLossModel.UMI_NLOS
    assert get_preset("fig5").methods == [PlanMethod.SINGLE_HOP_EQUAL, PlanMethod.SINGLE_HOP, PlanMethod.OPTIMAL]
    assert get_preset("fig6").backhaul_gain_dbi == 40.0
    assert get_preset("fig7").r_star_bps == 1.18e9


def test_street_canyon_preset_builds_arrays():
    config = get_preset("fig8")
    assert config.rate_model is RateKind.PILOT_PENALIZED
    scenario = config.to_scenario()
    assert scenario.pathloss_model is PathLossModel.UMI_STREET
    assert scenario.rate_model.coherence_length == pytest.approx(38000)
    assert scenario.pb_w == pytest.approx(6.4)
    # angular spread eats part of the 26 dBi array gain at each end
    assert scenario.backhaul_joint_gain_dbi < 2 * 26.1


def test_unknown_key_names_its_line():
    text = "n_relays=3\nspacing_m=150\nbogus_m=1\n"
    with pytest.raises(ScenarioConfigError) as error:
        parse_scenario_text(text)
    assert error.value.line == 3
    assert "bogus_m" in str(error.value)


def test_bad_value_line_skips_blanks_and_comments():
    text = "n_relays=3\n\n# carrier\nfc_ghz=abc\n"
    with pytest.raises(ScenarioConfigError) as error:
        parse_scenario_text(text)
    assert error.value.line == 4
    assert str(error.value).startswith("line 4:")


def test_duplicate_key():
    with pytest.raises(ScenarioConfigError) as error:
        parse_scenario_text("pb_w=1\npb_w=2\n")
    assert error.value.line == 2


def test_missing_keys_take_defaults_and_lists_split():
    config = parse_scenario_text("pathloss_model=los-plus-25\nr_star_grid_bps=1e8, 2e8\nmethods=optimal,direct\n")
    assert config.n_relays == 4
    assert config.r_star_grid_bps == [1e8, 2e8]
    assert config.methods == [PlanMethod.OPTIMAL, PlanMethod.DIRECT]


def test_file_on_top_of_preset(tmp_path):
    path = tmp_path / "scenario.env"
    path.write_text("n_relays=2\n", encoding="utf-8")
    config = load_scenario(path, preset="fig3", overrides=["pb_w=2"])
    assert config.n_relays == 2
    assert config.pb_w == 2.0
    assert config.pathloss_model is PathLossModel.LOS_PLUS_25


def test_bad_override():
    with pytest.raises(ScenarioConfigError):
        apply_overrides(ScenarioConfig(), ["n_relays"])
    with pytest.raises(ScenarioConfigError):
        apply_overrides(ScenarioConfig(), ["n_relays=-1"])


def test_unknown_preset_and_missing_file(tmp_path):
    with pytest.raises(ScenarioConfigError):
        get_preset("fig9")
    with pytest.raises(ScenarioConfigError):
        load_scenario(tmp_path / "absent.env")


def test_settings_enforce_eight_starts():
    with pytest.raises(ValidationError):
        Settings(solver_starts=4)
    assert Settings().solver_starts >= 8
