from foldedxxz.verify import CHECKS, run_checks


def test_all_checks_pass():
    results = run_checks()
    failing = [r for r in results if not r.passed]
    assert not failing, "; ".join(f"{r.name}: {r.detail}" for r in failing)


def test_check_selection():
    results = run_checks(["bessel-normalization"])
    assert len(results) == 1
    assert results[0].name == "bessel-normalization"


def test_check_names_unique():
    names = [name for name, _ in CHECKS]
    assert len(names) == len(set(names))
