from uaga.plotting import plot_iuaga_rounds, plot_loss_curves, plot_precision_bars

PNG = b"\x89PNG\r\n\x1a\n"


def test_figures_are_written(tmp_path):
    plot_loss_curves([(0, 1.4, 0.7, 0.1), (1, 1.3, 0.8, 0.05)], tmp_path / "loss.png")
    rows = [{"method": "Adv-NN", "P@1": 0.2, "P@5": 0.4, "P@10": 0.5,
             "P@1_std": 0.0, "P@5_std": 0.1, "P@10_std": 0.0}]
    plot_precision_bars(rows, tmp_path / "bars.png")
    plot_iuaga_rounds([{"round": 0, "pseudo_anchors": 5, "added_source_edges": 2, "added_target_edges": 1},
                       {"round": 1, "pseudo_anchors": 6, "added_source_edges": 0, "added_target_edges": 3}],
                      tmp_path / "rounds.png")
    for name in ("loss.png", "bars.png", "rounds.png"):
        assert (tmp_path / name).read_bytes()[:8] == PNG


def test_empty_history_still_plots(tmp_path):
    plot_loss_curves([], tmp_path / "empty.png")
    assert (tmp_path / "empty.png").exists()
