from hypothesis import given, strategies as st

from rudetox.text import LemmaTable, Token, load_lemma_table, normalize, normalize_text, tokenize


def surfaces(s):
    return [t.surface for t in tokenize(s).tokens]


def test_punctuation_split():
    assert surfaces("Привет, мир!") == ["Привет", ",", "мир", "!"]


def test_empty_and_whitespace():
    assert tokenize("").tokens == ()
    assert tokenize("   \t ").tokens == ()


def test_multiple_spaces_collapse():
    assert surfaces("a  b") == ["a", "b"]


def test_internal_punctuation_stays():
    assert surfaces("дура.а если") == ["дура.а", "если"]
    assert surfaces("(ой)...") == ["(", "ой", ")..."]


def test_pure_punctuation_unit_kept_whole():
    assert surfaces("ну ...") == ["ну", "..."]


def test_sentence_text_view():
    s = tokenize("Привет,   мир!")
    assert s.raw == "Привет,   мир!"
    assert s.text == "Привет , мир !"
    assert s.norms == ["привет", "мир"]
    assert s.keys == ["привет", ",", "мир", "!"]


def test_normalize_examples():
    assert normalize(Token.from_surface("Дурак!")) == "дурак"
    assert normalize(Token.from_surface("...")) == ""
    assert normalize("ИДИОТ") == "идиот"


text_st = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=40)


@given(text_st)
def test_tokenize_idempotent(s):
    once = tokenize(s)
    again = tokenize(once.text)
    assert [t.surface for t in again.tokens] == [t.surface for t in once.tokens]


@given(text_st)
def test_normalize_idempotent_and_case_insensitive(s):
    n = normalize_text(s)
    assert normalize_text(n) == n
    assert normalize_text(s.upper()) == n


@given(text_st)
def test_norm_empty_only_for_punctuation(s):
    for t in tokenize(s).tokens:
        if not t.norm:
            assert all(not ch.isalnum() for ch in t.surface)


def test_lemma_table(tmp_path):
    p = tmp_path / "lemmas.tsv"
    p.write_text("Дураки\tдурак\nидиотов\tидиот\n", encoding="utf-8")
    table = load_lemma_table(p)
    assert len(table) == 2
    assert table.lemma("дураки") == "дурак"
    assert table.lemma("мир") == "мир"
    assert isinstance(LemmaTable(), LemmaTable)
