"""Parser for textual function specifiers.

Examples::

    fourier:p=1
    iexp:u=0.5,1.0
    const:1
    prod(fourier:p=1,iexp:u=2)
    re(fourier:p=1)
    poly[0,0,1](re(fourier:p=1))
    intexp:f=pw[0:0.5=1;0.5:1=-1]
    intexp:f=poly[1]+sin[2]
    margexp:t=0.25,0.5,u=1,-1
"""

import re

from .algebra import (
    Composite,
    Constant,
    FourierMode,
    ImaginaryExp,
    IntegralExp,
    MarginalExp,
    Outer,
    Part,
    Piecewise,
    Polynomial,
    Product,
    Sum,
    Trig,
    add_integrands,
)
from .core import ConfigurationError

_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_COMPLEX = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?([+-](\d+\.?\d*|\.\d+)([eE][+-]?\d+)?j|j)?")
_IDENT = re.compile(r"[a-z_]+")
_UNARY = {"sin", "cos", "exp"}


class SpecError(ConfigurationError):
    pass


class _Parser:
    def __init__(self, text):
        self.text = text.replace("−", "-").replace(" ", "")
        self.pos = 0

    def fail(self, msg):
        raise SpecError(f"{msg} at position {self.pos} in {self.text!r}")

    def peek(self, s):
        return self.text.startswith(s, self.pos)

    def expect(self, s):
        if not self.peek(s):
            self.fail(f"expected {s!r}")
        self.pos += len(s)

    def match(self, pattern):
        m = pattern.match(self.text, self.pos)
        if not m or not m.group(0):
            return None
        self.pos = m.end()
        return m.group(0)

    def number(self):
        tok = self.match(_NUMBER)
        if tok is None:
            self.fail("expected a number")
        return float(tok)

    def numbers(self):
        """Comma-separated numbers, stopping before a comma that starts something else."""
        out = [self.number()]
        while self.peek(",") and _NUMBER.match(self.text, self.pos + 1):
            self.pos += 1
            out.append(self.number())
        return out

    def keyed(self):
        args = {}
        while True:
            key = self.match(_IDENT)
            if key is None:
                self.fail("expected a key")
            self.expect("=")
            args[key] = self.integrand() if key == "f" else self.numbers()
            save = self.pos
            if self.peek(","):
                self.pos += 1
                m = _IDENT.match(self.text, self.pos)
                if m and self.text.startswith("=", m.end()):
                    continue
                self.pos = save
            return args

    def integrand(self):
        parts = [self.integrand_atom()]
        while self.peek("+"):
            self.pos += 1
            parts.append(self.integrand_atom())
        return add_integrands(*parts)

    def integrand_atom(self):
        name = self.match(_IDENT)
        if name is None:
            return Polynomial((self.number(),))
        self.expect("[")
        if name == "pw":
            pieces = []
            while True:
                a = self.number()
                self.expect(":")
                b = self.number()
                self.expect("=")
                pieces.append((a, b, self.number()))
                if self.peek(";"):
                    self.pos += 1
                    continue
                break
            self.expect("]")
            return Piecewise(tuple(pieces))
        values = self.numbers()
        self.expect("]")
        if name == "poly":
            return Polynomial(tuple(values))
        if name in ("sin", "cos"):
            if len(values) > 2:
                self.fail(f"{name}[k] or {name}[k,amp] expected")
            return Trig(name, values[0], values[1] if len(values) > 1 else 1.0)
        self.fail(f"unknown integrand {name!r}")

    def term(self):
        name = self.match(_IDENT)
        if name is None:
            self.fail("expected a function name")
        if self.peek(":"):
            self.pos += 1
            return self.leaf(name)
        if self.peek("["):
            self.pos += 1
            coeffs = self.numbers()
            self.expect("]")
            inner = self.arguments()
            if name not in ("poly", "affine"):
                self.fail(f"{name} takes no coefficients")
            try:
                return Composite(Outer(name, tuple(coeffs)), tuple(inner))
            except ValueError as exc:
                raise SpecError(str(exc)) from None
        inner = self.arguments()
        if name == "prod":
            return Product(tuple(inner))
        if name == "sum":
            return Sum(tuple((1.0, f) for f in inner))
        if name in ("re", "im"):
            self._arity(name, inner, 1)
            return Part(inner[0], name)
        if name in _UNARY:
            self._arity(name, inner, 1)
            return Composite(Outer(name), tuple(inner))
        if name == "sq":
            self._arity(name, inner, 1)
            return Composite(Outer("poly", (0, 0, 1)), tuple(inner))
        if name == "mul":
            return Composite(Outer("mul", arity=len(inner)), tuple(inner))
        self.fail(f"unknown function {name!r}")

    def _arity(self, name, inner, k):
        if len(inner) != k:
            self.fail(f"{name} takes {k} argument(s), got {len(inner)}")

    def arguments(self):
        self.expect("(")
        out = [self.term()]
        while self.peek(","):
            self.pos += 1
            out.append(self.term())
        self.expect(")")
        return out

    def leaf(self, name):
        if name == "const":
            tok = self.match(_COMPLEX)
            if tok is None:
                self.fail("expected a constant")
            return Constant(complex(tok))
        if name == "scale":
            tok = self.match(_COMPLEX)
            if tok is None:
                self.fail("expected a scale factor")
            inner = self.arguments()
            self._arity(name, inner, 1)
            return Sum(((complex(tok), inner[0]),))
        args = self.keyed()
        try:
            if name == "fourier":
                (p,) = args.pop("p")
                if p != int(p):
                    self.fail("fourier mode must be an integer")
                fn = FourierMode(int(p))
            elif name == "iexp":
                fn = ImaginaryExp(tuple(args.pop("u")))
            elif name == "intexp":
                fn = IntegralExp(args.pop("f"))
            elif name == "margexp":
                fn = MarginalExp(tuple(args.pop("t")), tuple(args.pop("u")))
            else:
                self.fail(f"unknown function {name!r}")
        except KeyError as exc:
            self.fail(f"{name} is missing argument {exc.args[0]!r}")
        except ValueError as exc:
            if isinstance(exc, SpecError):
                raise
            self.fail(str(exc))
        if args:
            self.fail(f"{name} got unexpected arguments {sorted(args)}")
        return fn


def parse_function(text):
    """Parse a function specifier into an algebra element."""
    if not isinstance(text, str) or not text.strip():
        raise SpecError("empty function specifier")
    parser = _Parser(text)
    fn = parser.term()
    if parser.pos != len(parser.text):
        parser.fail("trailing characters")
    return fn


def parse_integrand(text):
    parser = _Parser(text)
    f = parser.integrand()
    if parser.pos != len(parser.text):
        parser.fail("trailing characters")
    return f
