from qlh.verify import verify_all


def test_payloads_match_golden_files():
    rows = verify_all()
    assert [r["criterion"] for r in rows] == list(range(1, 10))
    for r in rows:
        assert r["passed"], r["criterion"]
        assert r["golden_match"], r["criterion"]
