import io

import pytest
from hypothesis import given, strategies as st
from reportlab.pdfgen import canvas

from resumeflow.errors import EncryptedPdf, NoExtractableText, NotAPdf
from resumeflow.ingest import Origin, extract_pdf_text, from_text, normalize_text


def make_pdf(*pages: list[str], compress: int = 0, encrypt: str | None = None) -> bytes:
    buf = io.BytesIO()
    c = canvas.Canvas(buf, pageCompression=compress, encrypt=encrypt)
    for lines in pages:
        for i, line in enumerate(lines):
            c.drawString(72, 720 - 18 * i, line)
        c.showPage()
    c.save()
    return buf.getvalue()


# --- extract_pdf_text ---------------------------------------------------------

def test_single_page_hello():
    doc = extract_pdf_text(make_pdf(["Hello"]))
    assert doc.raw_text == "Hello"
    assert doc.page_count == 1
    assert doc.origin is Origin.PDF_UPLOAD
    assert doc.byte_size > 0


def test_not_a_pdf():
    with pytest.raises(NotAPdf):
        extract_pdf_text(b"GIF89a....")


def test_two_pages_in_order_with_form_feed():
    doc = extract_pdf_text(make_pdf(["First page"], ["Second page"]))
    assert doc.page_count == 2
    assert doc.raw_text == "First page\fSecond page"


def test_encrypted_pdf_detected():
    with pytest.raises(EncryptedPdf):
        extract_pdf_text(make_pdf(["classified"], encrypt="secret"))


def test_image_only_page_has_no_text():
    with pytest.raises(NoExtractableText):
        extract_pdf_text(make_pdf([]))


def test_compressed_stream_and_latin_chars():
    text = "Söhne & O'Brien — café 50%"
    doc = extract_pdf_text(make_pdf([text], compress=1))
    assert doc.raw_text == text


def test_line_order_top_to_bottom():
    lines = ["Line one", "Line two", "Line three"]
    doc = extract_pdf_text(make_pdf(lines, compress=1))
    assert doc.raw_text.splitlines() == lines


def test_extraction_stable():
    data = make_pdf(["alpha", "beta"], ["gamma"])
    assert extract_pdf_text(data) == extract_pdf_text(data)


# --- normalize_text -----------------------------------------------------------

def test_crlf_to_lf():
    assert normalize_text("a\r\nb") == "a\nb"


def test_blank_line_collapse():
    assert normalize_text("a\n\n\n\n\nb") == "a\n\nb"
    assert normalize_text("a\n\nb") == "a\n\nb"


def test_trailing_whitespace_stripped():
    assert normalize_text("a   \nb\t") == "a\nb"


@given(st.text(max_size=300))
def test_normalize_idempotent(text):
    once = normalize_text(text)
    assert normalize_text(once) == once


@given(st.text(max_size=300))
def test_normalize_preserves_non_whitespace(text):
    import unicodedata
    from collections import Counter

    def payload(s):
        return Counter(ch for ch in unicodedata.normalize("NFC", s) if not ch.isspace())

    assert payload(normalize_text(text)) == payload(text)


# --- from_text ------------------------------------------------------------------

def test_from_text_bypasses_pdf():
    doc = from_text("plain resume\r\nsecond line")
    assert doc.origin is Origin.PLAIN_TEXT
    assert doc.page_count == 0
    assert doc.raw_text == "plain resume\nsecond line"


def test_from_text_rejects_empty():
    with pytest.raises(NoExtractableText):
        from_text("   \n\n  ")
