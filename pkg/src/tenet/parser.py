"""Text form of expressions: parser and serializer.

Grammar (whitespace separates tokens; factors are juxtaposed):

    expr    := [sign] term (sign term)*         sign: + - or unicode minus
    term    := coefficient | [coefficient] factor+
    factor  := label['*'] '{' slots '}' [':' symtag]   tensor or operator
             | name['*']                                variable (scalar)
    slots   := indexlist? ';' indexlist? (';' indexlist)?    bra ; ket ; aux
    index   := space '_' int ['<' indexlist '>']  or  '_' for an empty slot
    coefficient := int['/'int]['i'] | '(' real sign imag'i' ')'

Operator labels are special: 'a' is a genuine-vacuum normal operator and the
tilde form is the Fermi-vacuum one; their bra holds annihilators and their ket
holds creators. 'δ' defaults to bra-ket symmetric. Other labels take their
symmetry from an explicit ':' tag or the registry's tensor_defaults.

Serialization is the inverse: parse(serialize(e)) == e for expressions the
grammar covers (sums of products of atoms). Nested sums inside products are
rendered with parentheses for debugging but are not parseable.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .expr import Constant, Expr, Product, Sum, Variable, mk_product, mk_sum
from .scalars import CRational
from .spaces import Index, IndexSpaceRegistry, SpaceError, default_registry
from .tensors import (CONJUGATE, DELTA_LABEL, NONSYMM, SYMM, NormalOperator,
                      Tensor, make_operator, make_tensor, parse_symmetry_tag,
                      symmetry_tag)

FERMI_OP_LABELS = ("ã", "ã")  # precomposed and combining forms
GENUINE_OP_LABEL = "a"

_PUNCT = set("{};,<>:+-()*_/")
_MINUS = {"-", "−"}


class SourceSpan:
    __slots__ = ("start", "end")

    def __init__(self, start: int, end: int):
        self.start = start
        self.end = end

    def __repr__(self):
        return f"SourceSpan({self.start}, {self.end})"


class ParseError(Exception):
    def __init__(self, message: str, source: str, span: SourceSpan):
        self.span = span
        excerpt = source[max(0, span.start - 30):span.start + 30]
        caret = " " * (span.start - max(0, span.start - 30)) + "^"
        super().__init__(f"{message} at offset {span.start}\n  {excerpt}\n  {caret}")


class _Token:
    __slots__ = ("kind", "text", "span")

    def __init__(self, kind: str, text: str, span: SourceSpan):
        self.kind = kind  # ident | number | punct | end
        self.text = text
        self.span = span

    def __repr__(self):
        return f"{self.kind}:{self.text!r}"


def _tokenize(src: str) -> list[_Token]:
    toks: list[_Token] = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in _MINUS:
            toks.append(_Token("punct", "-", SourceSpan(i, i + 1)))
            i += 1
            continue
        if c in _PUNCT:
            toks.append(_Token("punct", c, SourceSpan(i, i + 1)))
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(_Token("number", src[i:j], SourceSpan(i, j)))
            i = j
            continue
        # identifier: letters plus combining marks, stopping at punctuation
        j = i
        while j < n:
            cj = src[j]
            if cj.isspace() or cj in _PUNCT or cj in _MINUS:
                break
            j += 1
        if j == i:
            raise ParseError(f"unexpected character {c!r}", src, SourceSpan(i, i + 1))
        toks.append(_Token("ident", src[i:j], SourceSpan(i, j)))
        i = j
    toks.append(_Token("end", "", SourceSpan(n, n)))
    return toks


class _Parser:
    def __init__(self, src: str, registry: IndexSpaceRegistry):
        self.src = src
        self.reg = registry
        self.toks = _tokenize(src)
        self.pos = 0

    # -- token plumbing --

    def peek(self, ahead: int = 0) -> _Token:
        k = min(self.pos + ahead, len(self.toks) - 1)
        return self.toks[k]

    def next(self) -> _Token:
        t = self.toks[self.pos]
        if t.kind != "end":
            self.pos += 1
        return t

    def expect(self, kind: str, text: Optional[str] = None) -> _Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {t.text or 'end of input'!r}",
                             self.src, t.span)
        return self.next()

    def at_punct(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text == text

    # -- grammar --

    def parse_expr(self) -> Expr:
        terms: list[Expr] = []
        sign = 1
        if self.at_punct("+") or self.at_punct("-"):
            sign = -1 if self.next().text == "-" else 1
        terms.append(self.parse_term(sign))
        while self.at_punct("+") or self.at_punct("-"):
            sign = -1 if self.next().text == "-" else 1
            terms.append(self.parse_term(sign))
        t = self.peek()
        if t.kind != "end":
            raise ParseError(f"trailing input {t.text!r}", self.src, t.span)
        return mk_sum(terms) if len(terms) > 1 else terms[0]

    def parse_term(self, sign: int) -> Expr:
        coeff = self.parse_coefficient()
        factors: list[Expr] = []
        while self.peek().kind == "ident":
            factors.append(self.parse_factor())
        if coeff is None:
            if not factors:
                t = self.peek()
                raise ParseError("expected a term", self.src, t.span)
            coeff = CRational(1)
        if not factors:
            return Constant(coeff * sign)
        return mk_product(coeff * sign, factors)

    def parse_coefficient(self) -> Optional[CRational]:
        t = self.peek()
        if t.kind == "number":
            return self.parse_signed_rational(1)
        if t.kind == "punct" and t.text == "(":
            self.next()
            re = self.parse_signed_rational(1, allow_sign=True)
            sign = 1
            if self.at_punct("+") or self.at_punct("-"):
                sign = -1 if self.next().text == "-" else 1
                im = self.parse_signed_rational(sign, require_imag=True)
                value = CRational(re.re, im.im) if re.is_real() else None
                if value is None:
                    raise ParseError("malformed complex literal", self.src, t.span)
            else:
                value = re
            self.expect("punct", ")")
            return value
        return None

    def parse_signed_rational(self, sign: int, allow_sign: bool = False,
                              require_imag: bool = False) -> CRational:
        if allow_sign and (self.at_punct("+") or self.at_punct("-")):
            sign *= -1 if self.next().text == "-" else 1
        t = self.expect("number")
        num = int(t.text)
        den = 1
        end = t.span.end
        if self.at_punct("/"):
            self.next()
            dt = self.expect("number")
            den = int(dt.text)
            if den == 0:
                raise ParseError("zero denominator", self.src, t.span)
            end = dt.span.end
        value = Fraction(num * sign, den)
        imag = False
        nxt = self.peek()
        if (nxt.kind == "ident" and nxt.text == "i" and nxt.span.start == end
                and not (self.peek(1).kind == "punct" and self.peek(1).text == "_")):
            self.next()
            imag = True
        if require_imag and not imag:
            raise ParseError("expected imaginary part ending in 'i'", self.src, t.span)
        return CRational(0, value) if imag else CRational(value)

    def parse_factor(self) -> Expr:
        t = self.expect("ident")
        label = t.text
        conjugated = False
        if self.at_punct("*"):
            self.next()
            conjugated = True
        if not self.at_punct("{"):
            return Variable(label, conjugated)
        self.next()
        bundles: list[list[Optional[Index]]] = [[]]
        while not self.at_punct("}"):
            if self.at_punct(";"):
                self.next()
                bundles.append([])
                continue
            if self.at_punct(","):
                self.next()
                continue
            bundles[-1].append(self.parse_slot())
        close = self.expect("punct", "}")
        if len(bundles) > 3:
            raise ParseError("at most three slot bundles (bra;ket;aux)",
                             self.src, close.span)
        while len(bundles) < 3:
            bundles.append([])
        bra, ket, aux = bundles
        tag = None
        if self.at_punct(":"):
            self.next()
            tag = self.parse_symtag()
        return self.build_atom(label, conjugated, bra, ket, aux, tag, t.span)

    def parse_symtag(self) -> str:
        first = self.expect("ident")
        parts = [first.text]
        end = first.span.end
        # dashes inside a tag are written without spaces; a spaced '-' starts
        # the next term instead
        while (self.at_punct("-") and self.peek().span.start == end
               and self.peek(1).kind == "ident"
               and self.peek(1).span.start == self.peek().span.end):
            self.next()
            t = self.expect("ident")
            parts.append(t.text)
            end = t.span.end
        return "-".join(parts)

    def parse_slot(self) -> Optional[Index]:
        if self.at_punct("_"):
            self.next()
            return None
        return self.parse_index()

    def parse_index(self) -> Index:
        t = self.expect("ident")
        self.expect("punct", "_")
        num = self.expect("number")
        try:
            space = self.reg.space(t.text)
        except SpaceError as exc:
            raise ParseError(str(exc), self.src, t.span) from None
        protos: list[Index] = []
        if self.at_punct("<"):
            self.next()
            while not self.at_punct(">"):
                if self.at_punct(","):
                    self.next()
                    continue
                protos.append(self.parse_index())
            self.expect("punct", ">")
        return Index(space, int(num.text), tuple(protos))

    def build_atom(self, label: str, conjugated: bool,
                   bra: list[Optional[Index]], ket: list[Optional[Index]],
                   aux: list[Index], tag: Optional[str], span: SourceSpan) -> Expr:
        if label in FERMI_OP_LABELS or label == GENUINE_OP_LABEL:
            if conjugated or tag is not None or aux:
                raise ParseError("normal operators take no '*', ':' tag, or aux slots",
                                 self.src, span)
            if any(s is None for s in bra) or any(s is None for s in ket):
                raise ParseError("normal operators cannot have empty slots",
                                 self.src, span)
            vacuum = "genuine" if label == GENUINE_OP_LABEL else "fermi"
            return make_operator(creators=ket, annihilators=bra, vacuum=vacuum)
        if any(s is None for s in aux):
            raise ParseError("aux slots cannot be empty", self.src, span)
        kwargs = {}
        if tag is not None:
            try:
                p, b, c = parse_symmetry_tag(tag)
            except Exception:
                raise ParseError(f"bad symmetry tag {tag!r}", self.src, span) from None
            kwargs = dict(perm_symmetry=p, braket_symmetry=b, column_symmetry=c)
        try:
            return make_tensor(label, bra, ket, aux, conjugated=conjugated,
                               registry=self.reg, **kwargs)
        except Exception as exc:
            raise ParseError(str(exc), self.src, span) from None


def parse(text: str, registry: Optional[IndexSpaceRegistry] = None) -> Expr:
    """Parse an expression in the text syntax."""
    reg = registry if registry is not None else default_registry()
    return _Parser(text, reg).parse_expr()


def parse_index(text: str, registry: Optional[IndexSpaceRegistry] = None) -> Index:
    reg = registry if registry is not None else default_registry()
    p = _Parser(text, reg)
    ix = p.parse_index()
    if p.peek().kind != "end":
        raise ParseError("trailing input after index", text, p.peek().span)
    return ix


# -- serialization ------------------------------------------------------------


def _slot_str(ix: Optional[Index]) -> str:
    return "_" if ix is None else str(ix)


def _default_tag_for(label: str, registry: Optional[IndexSpaceRegistry]) -> tuple[str, str, str]:
    tag = registry.tensor_defaults.get(label) if registry else None
    p, b, c = parse_symmetry_tag(tag) if tag else (NONSYMM, NONSYMM, NONSYMM)
    if label == DELTA_LABEL:
        b = SYMM
    return p, b, c


def _serialize_atom(e: Expr, registry: Optional[IndexSpaceRegistry]) -> str:
    if isinstance(e, Variable):
        return e.name + ("*" if e.conjugated else "")
    if isinstance(e, NormalOperator):
        label = "ã" if e.vacuum == "fermi" else "a"
        bra = ",".join(_slot_str(ix) for ix in e.annihilators)
        ket = ",".join(_slot_str(ix) for ix in e.creators)
        return f"{label}{{{bra};{ket}}}"
    if isinstance(e, Tensor):
        name = e.label + ("*" if e.conjugated else "")
        bra = ",".join(_slot_str(ix) for ix in e.bra)
        ket = ",".join(_slot_str(ix) for ix in e.ket)
        body = f"{bra};{ket}"
        if e.aux:
            body += ";" + ",".join(_slot_str(ix) for ix in e.aux)
        actual = (e.perm_symmetry, e.braket_symmetry, e.column_symmetry)
        if actual != _default_tag_for(e.label, registry):
            return f"{name}{{{body}}}:{symmetry_tag(e)}"
        return f"{name}{{{body}}}"
    raise TypeError(f"not an atom: {type(e).__name__}")


def _serialize_term(e: Expr, registry) -> tuple[str, str]:
    """Return (sign, body) with sign '+' or '-'."""
    if isinstance(e, Product):
        coeff, factors = e.prefactor, e.factors
    elif isinstance(e, Constant):
        coeff, factors = e.value, ()
    else:
        coeff, factors = CRational(1), (e,)
    sign = "+"
    if (coeff.is_real() and coeff.re < 0) or (coeff.re == 0 and coeff.im < 0):
        sign, coeff = "-", -coeff
    parts = []
    if not coeff.is_one() or not factors:
        text = str(coeff)
        parts.append(text)
    for f in factors:
        if isinstance(f, Sum):
            inner = serialize(f, registry)
            parts.append(f"({inner})")  # display only, not parseable
        else:
            parts.append(_serialize_atom(f, registry))
    return sign, " ".join(parts)


def serialize(e: Expr, registry: Optional[IndexSpaceRegistry] = None) -> str:
    """Render an expression in the text syntax."""
    terms = e.terms if isinstance(e, Sum) else (e,)
    out: list[str] = []
    for k, t in enumerate(terms):
        sign, body = _serialize_term(t, registry)
        if k == 0:
            out.append(body if sign == "+" else f"- {body}")
        else:
            out.append(f"{sign} {body}")
    return " ".join(out)
