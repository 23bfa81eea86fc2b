from __future__ import annotations

import re
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vizlink import (
    FailureKind,
    extract_code,
    process,
    rewrite_data_binding,
    validate_contract,
)
from vizlink.errors import CodeParseFailure, MissingCodeTag
from vizlink.postprocess import (
    INSERTED_ATTR_CALL,
    layout_suspects,
    revalidate_code,
    tokenize,
    undefined_identifiers,
    unknown_d3_calls,
)

FIXTURES = Path(__file__).parent / "fixtures"
CHARTS = sorted((FIXTURES / "charts").glob("*.js"))
ADVERSARIAL = FIXTURES / "adversarial"

# independent count of data-join chains: textual .enter().append occurrences
JOIN_RE = re.compile(r"\.enter\s*\(\s*\)\s*\.\s*append\b")

EXPECTED_FAILURES = {
    "missing_tag_prose_only.txt": FailureKind.MISSING_CODE_TAG,
    "missing_tag_short.txt": FailureKind.MISSING_CODE_TAG,
    "missing_tag_unclosed.txt": FailureKind.MISSING_CODE_TAG,
    "undefined_chartdata.txt": FailureKind.UNDEFINED_VARIABLE,
    "undefined_width_height.txt": FailureKind.UNDEFINED_VARIABLE,
    "undefined_moment_library.txt": FailureKind.UNDEFINED_VARIABLE,
    "unknown_fn_scalechrono.txt": FailureKind.UNKNOWN_FUNCTION,
    "unknown_fn_boxplot_plugin.txt": FailureKind.UNKNOWN_FUNCTION,
    "missing_globals_no_viewport.txt": FailureKind.MISSING_GLOBAL_SCALES,
    "missing_globals_no_return.txt": FailureKind.MISSING_GLOBAL_SCALES,
    "missing_globals_own_root.txt": FailureKind.MISSING_GLOBAL_SCALES,
    "unterminated_string.txt": FailureKind.UNDEFINED_VARIABLE,
    "layout_literal_svg_size.txt": FailureKind.LAYOUT_SUSPECT,
    "fenced_fallback_ok.txt": None,
}


def token_view(code: str) -> list[tuple[str, str]]:
    return [(t.type, t.text) for t in tokenize(code)]


class TestExtractCode:
    def test_basic_tag_split(self):
        explanation, code, warnings = extract_code(
            "Here is the chart. <D3>const a=1;</D3>"
        )
        assert explanation == "Here is the chart."
        assert code == "const a=1;"
        assert warnings == []

    def test_no_code_raises(self):
        with pytest.raises(MissingCodeTag):
            extract_code("no code here at all")

    def test_nested_close_tag_inside_string_survives(self):
        code = 'const s = "</D3>"; const t = 1;'
        raw = f"note <D3>{code}</D3> done"
        _, extracted, _ = extract_code(raw)
        assert extracted == code

    def test_fenced_fallback_warns(self):
        raw = "forgot tags\n```js\nconst a = 1;\n```\n"
        explanation, code, warnings = extract_code(raw)
        assert code == "const a = 1;\n"
        assert len(warnings) == 1
        assert "fenced" in warnings[0]

    @settings(max_examples=50, deadline=None)
    @given(st.text(alphabet=st.characters(blacklist_characters="<"), max_size=200))
    def test_wrap_then_extract_round_trips(self, code):
        raw = f"explain\n<D3>{code}</D3>\ntail"
        _, extracted, _ = extract_code(raw)
        assert extracted == code


class TestValidateContract:
    def test_full_contract_fixture(self):
        code = CHARTS[0].read_text()
        flags = validate_contract(code)
        assert flags.all_ok()

    def test_missing_viewport_flags(self):
        code = "const xScale = 1; const yScale = 2; svg.append('g'); return [xScale, yScale];"
        flags = validate_contract(code)
        assert not flags.has_viewport_globals
        assert flags.has_root_global and flags.returns_global_scales

    def test_empty_code_all_false(self):
        flags = validate_contract("")
        assert not flags.has_root_global
        assert not flags.has_viewport_globals
        assert not flags.returns_global_scales

    def test_unterminated_string_raises(self):
        with pytest.raises(CodeParseFailure):
            validate_contract('const s = "oops;\nmore')


class TestAnalyses:
    def test_undefined_identifier_found(self):
        tokens = tokenize("const a = 1; svg.append(bogusName);")
        assert undefined_identifiers(tokens) == ["bogusName"]

    def test_arrow_and_function_params_declared(self):
        tokens = tokenize(
            "const f = (d, i) => d + i; function g(x) { return x; } data.map(d => d.v);"
        )
        assert undefined_identifiers(tokens) == []

    def test_destructuring_declared(self):
        tokens = tokenize("const { top, left } = box; const [a, b] = pair;")
        assert set(undefined_identifiers(tokens)) == {"box", "pair"}

    def test_object_keys_not_uses(self):
        tokens = tokenize("const m = { top: 1, bottom: 2 };")
        assert undefined_identifiers(tokens) == []

    def test_unknown_d3_entry_point(self):
        tokens = tokenize("const s = d3.scaleChrono();")
        assert unknown_d3_calls(tokens) == ["scaleChrono"]

    def test_known_d3_chains_ok(self):
        tokens = tokenize("d3.scaleLinear().domain([0,1]).range([0,2]);")
        assert unknown_d3_calls(tokens) == []

    def test_layout_literal_size(self):
        tokens = tokenize('svg.attr("width", 800);')
        assert len(layout_suspects(tokens)) == 1

    def test_layout_viewport_expression_ok(self):
        tokens = tokenize('svg.attr("width", vw - 20);')
        assert layout_suspects(tokens) == []


class TestRewriteDataBinding:
    def test_basic_chain_gets_attribute_call(self):
        code = "sel.data(rows).enter().append('rect')"
        out = rewrite_data_binding(code)
        assert out == code + INSERTED_ATTR_CALL

    def test_insertion_precedes_following_links(self):
        code = "sel.data(rows).enter().append('rect').attr('x', d => d.x);"
        out = rewrite_data_binding(code)
        assert out.index(INSERTED_ATTR_CALL) < out.index(".attr('x'")

    def test_zero_chains_identity(self):
        code = "const a = 1;\nsvg.append('g').attr('x', 2);"
        assert rewrite_data_binding(code) == code

    def test_prebound_chain_skipped(self):
        code = (
            "a.data(r).enter().append('rect').attr('data', d => d.id);\n"
            "b.data(r).enter().append('circle');\n"
        )
        out = rewrite_data_binding(code)
        assert out.count('.attr("data"') == 1  # exactly one insertion
        assert out.count(".attr('data'") == 1  # the pre-bound one untouched

    def test_chain_across_newlines_and_comments(self):
        code = "sel.data(rows) // join\n  .enter()\n  /* make */ .append('rect')"
        out = rewrite_data_binding(code)
        assert out.endswith(INSERTED_ATTR_CALL)

    def test_enter_without_data_not_rewritten(self):
        code = "sel.enter().append('rect');"
        assert rewrite_data_binding(code) == code

    def test_data_append_without_enter_not_rewritten(self):
        code = "sel.data(rows).join('rect'); sel.append('g');"
        assert rewrite_data_binding(code) == code


def assert_only_insertions(before: str, after: str, expected_insertions: int):
    """Diff oracle: removing every inserted-call occurrence from the output
    must reproduce the input byte-for-byte, so no other token can change."""
    assert INSERTED_ATTR_CALL not in before
    stripped = after.replace(INSERTED_ATTR_CALL, "")
    assert stripped == before
    assert after.count(INSERTED_ATTR_CALL) == expected_insertions
    # and the token stream outside insertions is untouched
    assert token_view(stripped) == token_view(before)


class TestChartCorpus:
    @pytest.mark.parametrize("path", CHARTS, ids=[p.stem for p in CHARTS])
    def test_contract_valid(self, path):
        assert validate_contract(path.read_text()).all_ok()

    @pytest.mark.parametrize("path", CHARTS, ids=[p.stem for p in CHARTS])
    def test_one_insertion_per_join_chain(self, path):
        code = path.read_text()
        expected = len(JOIN_RE.findall(code))
        assert expected >= 1
        rewritten = rewrite_data_binding(code)
        assert rewritten.count(INSERTED_ATTR_CALL) == expected
        assert_only_insertions(code, rewritten, expected)

    @pytest.mark.parametrize("path", CHARTS, ids=[p.stem for p in CHARTS])
    def test_idempotent(self, path):
        once = rewrite_data_binding(path.read_text())
        assert rewrite_data_binding(once) == once

    @pytest.mark.parametrize("path", CHARTS, ids=[p.stem for p in CHARTS])
    def test_process_full_response_clean(self, path):
        raw = f"Here is the chart.\n<D3>{path.read_text()}</D3>"
        artifact = process(raw)
        assert artifact.failure is None
        assert artifact.validation.all_ok()
        assert artifact.processed_code != artifact.extracted_code

    @pytest.mark.parametrize("path", CHARTS, ids=[p.stem for p in CHARTS])
    def test_extraction_round_trip_byte_exact(self, path):
        code = path.read_text()
        raw = f"pre\n<D3>{code}</D3>\npost"
        _, extracted, _ = extract_code(raw)
        assert extracted == code


class TestAdversarialCorpus:
    @pytest.mark.parametrize(
        "name,expected",
        sorted(EXPECTED_FAILURES.items()),
        ids=sorted(EXPECTED_FAILURES),
    )
    def test_maps_to_expected_class(self, name, expected):
        raw = (ADVERSARIAL / name).read_text()
        artifact = process(raw)  # must never raise
        if expected is None:
            assert artifact.failure is None
            assert artifact.warnings  # fenced fallback recorded
        else:
            assert artifact.failure is not None
            assert artifact.failure.kind == expected

    def test_corpus_is_complete(self):
        names = {p.name for p in ADVERSARIAL.glob("*.txt")}
        assert names == set(EXPECTED_FAILURES)
        assert len([k for k, v in EXPECTED_FAILURES.items() if v is not None]) >= 12


class TestRevalidate:
    def test_user_edit_missing_globals_flagged(self):
        artifact = process(f"<D3>{CHARTS[0].read_text()}</D3>")
        stripped = "const xScale = 1; const yScale = 2; return [xScale, yScale];"
        edited = revalidate_code(artifact, stripped)
        assert edited.failure is not None
        assert edited.failure.kind == FailureKind.MISSING_GLOBAL_SCALES
        assert "svg unused" in edited.failure.detail
        assert "vw/vh unused" in edited.failure.detail

    def test_edit_keeps_raw_response(self):
        artifact = process(f"<D3>{CHARTS[0].read_text()}</D3>")
        edited = revalidate_code(artifact, CHARTS[1].read_text())
        assert edited.raw_response == artifact.raw_response
        assert edited.failure is None


_WS = st.sampled_from(["", " ", "\n", "\n  ", " /* join */ ", " // gap\n  "])
_TAG = st.sampled_from(["'rect'", '"circle"', "'g'", "elementKind()"])
_ARGS = st.sampled_from(["rows", "rows.filter(d => d.v > 0)", "d3.range(10)", "grouped[0]"])


class TestRewriteProperty:
    """Randomized chain compositions: the matcher must insert exactly once
    per data→enter→append chain and never touch surrounding bytes."""

    @settings(max_examples=120, deadline=None)
    @given(data=st.data(), chains=st.integers(min_value=0, max_value=4))
    def test_random_chain_programs(self, data, chains):
        parts = [
            "const rows = data;",
            "const grouped = [rows];",
            "function elementKind() { return 'rect'; }",
        ]
        expected = 0
        for index in range(chains):
            w = [data.draw(_WS) for _ in range(6)]
            tag = data.draw(_TAG)
            args = data.draw(_ARGS)
            complete = data.draw(st.booleans())
            tail = data.draw(
                st.sampled_from(["", ".attr('x', d => d.v)", ".style('fill', 'red')"])
            )
            if complete:
                parts.append(
                    f"svg.selectAll({tag}){w[0]}.data({args}){w[1]}"
                    f".enter{w[2]}(){w[3]}.append{w[4]}({tag}){w[5]}{tail};"
                )
                expected += 1
            else:
                # broken chains: missing enter, or statement boundary mid-chain
                shape = data.draw(st.integers(min_value=0, max_value=2))
                if shape == 0:
                    parts.append(f"svg.selectAll({tag}).data({args}).join({tag}){tail};")
                elif shape == 1:
                    parts.append(f"svg.selectAll({tag}).data({args}).enter();")
                    parts.append(f"svg.append({tag}){tail};")
                else:
                    parts.append(f"svg.selectAll({tag}).enter().append({tag});")
            _ = index
        code = "\n".join(parts)
        rewritten = rewrite_data_binding(code)
        assert rewritten.count(INSERTED_ATTR_CALL) == expected
        assert rewritten.replace(INSERTED_ATTR_CALL, "") == code
        assert rewrite_data_binding(rewritten) == rewritten
