//! OpenQASM 2.0 text for [`QuantumCircuit`]s.
//!
//! Only the subset this crate emits is read back: one quantum register, at
//! most one classical register, `cx`, `u1`, `ry`, `rz`, `barrier` and
//! `measure`. Angles are written as `{:.16e}` literals so every `f64`
//! survives the round trip exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gates::{Gate, QuantumCircuit};

/// A circuit plus terminal measurements `(qubit, clbit)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QasmProgram {
    pub circuit: QuantumCircuit,
    pub measurements: Vec<(usize, usize)>,
}

impl QasmProgram {
    pub fn new(circuit: QuantumCircuit) -> Self {
        Self { circuit, measurements: Vec::new() }
    }

    fn num_clbits(&self) -> usize {
        self.measurements.iter().map(|&(_, c)| c + 1).max().unwrap_or(0)
    }
}

fn angle(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn emit(program: &QasmProgram) -> Result<String> {
    let circuit = &program.circuit;
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    writeln!(out, "qreg q[{}];", circuit.num_qubits()).unwrap();
    let clbits = program.num_clbits();
    if clbits > 0 {
        writeln!(out, "creg c[{clbits}];").unwrap();
    }
    for op in circuit.ops() {
        match op.gate {
            Gate::Cx => writeln!(out, "cx q[{}],q[{}];", op.wires[0], op.wires[1]),
            Gate::U1(t) | Gate::Ry(t) | Gate::Rz(t) => {
                if !t.is_finite() {
                    return Err(Error::NonFinite);
                }
                writeln!(out, "{}({}) q[{}];", op.gate.name(), angle(t), op.wires[0])
            }
            Gate::Unitary { ref name, .. } => {
                return Err(Error::Qasm { line: 0, msg: format!("gate `{name}` has no qelib1 spelling") })
            }
        }
        .unwrap();
    }
    for &(q, c) in &program.measurements {
        if q >= circuit.num_qubits() {
            return Err(Error::WireOutOfRange { wire: q, num_qubits: circuit.num_qubits() });
        }
        writeln!(out, "measure q[{q}] -> c[{c}];").unwrap();
    }
    Ok(out)
}

pub fn emit_circuit(circuit: &QuantumCircuit) -> Result<String> {
    emit(&QasmProgram::new(circuit.clone()))
}

struct Parser {
    qreg: Option<(String, usize)>,
    creg: Option<(String, usize)>,
    circuit: Option<QuantumCircuit>,
    measurements: Vec<(usize, usize)>,
}

pub fn parse(text: &str) -> Result<QasmProgram> {
    let mut p = Parser { qreg: None, creg: None, circuit: None, measurements: Vec::new() };
    let mut seen_header = false;
    let mut stmt = String::new();
    let mut stmt_line = 1;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split("//").next().unwrap_or("");
        for ch in line.chars() {
            if stmt.trim().is_empty() {
                stmt_line = idx + 1;
            }
            if ch == ';' {
                let s = stmt.trim().to_string();
                stmt.clear();
                if s.is_empty() {
                    continue;
                }
                if !seen_header {
                    if s.split_whitespace().collect::<Vec<_>>() != ["OPENQASM", "2.0"] {
                        return Err(qasm_err(stmt_line, "expected `OPENQASM 2.0;` header"));
                    }
                    seen_header = true;
                    continue;
                }
                p.statement(&s).map_err(|msg| qasm_err(stmt_line, &msg))?;
            } else {
                stmt.push(ch);
            }
        }
        stmt.push(' ');
    }
    if !stmt.trim().is_empty() {
        return Err(qasm_err(stmt_line, "missing `;`"));
    }
    if !seen_header {
        return Err(qasm_err(1, "empty program"));
    }
    let circuit = p.circuit.ok_or_else(|| qasm_err(0, "no qreg declared"))?;
    Ok(QasmProgram { circuit, measurements: p.measurements })
}

fn qasm_err(line: usize, msg: &str) -> Error {
    Error::Qasm { line, msg: msg.to_string() }
}

impl Parser {
    fn statement(&mut self, s: &str) -> std::result::Result<(), String> {
        let (head, rest) = split_head(s);
        match head {
            "include" => {
                if rest.trim() != "\"qelib1.inc\"" {
                    return Err(format!("unsupported include {}", rest.trim()));
                }
            }
            "qreg" | "creg" => {
                let (name, size) = register_ref(rest)?;
                let slot = if head == "qreg" { &mut self.qreg } else { &mut self.creg };
                if slot.is_some() {
                    return Err(format!("only one {head} is supported"));
                }
                if head == "qreg" {
                    self.circuit = Some(QuantumCircuit::new(size).map_err(|e| e.to_string())?);
                }
                *slot = Some((name, size));
            }
            "barrier" => {}
            "measure" => {
                let (q, c) = rest.split_once("->").ok_or("measure needs `->`")?;
                let q = self.qubit(q)?;
                let c = self.clbit(c)?;
                self.measurements.push((q, c));
            }
            _ => self.gate(s)?,
        }
        Ok(())
    }

    fn gate(&mut self, s: &str) -> std::result::Result<(), String> {
        let (name, param, args) = match s.find('(') {
            Some(open) => {
                let close = s.rfind(')').ok_or("unbalanced parenthesis")?;
                (s[..open].trim(), Some(&s[open + 1..close]), &s[close + 1..])
            }
            None => {
                let (h, r) = split_head(s);
                (h, None, r)
            }
        };
        let wires = args.split(',').map(|a| self.qubit(a)).collect::<std::result::Result<Vec<_>, _>>()?;
        let angle = param.map(eval).transpose()?;
        let gate = match (name, angle) {
            ("cx" | "CX", None) => Gate::Cx,
            ("u1", Some(t)) => Gate::U1(t),
            ("ry", Some(t)) => Gate::Ry(t),
            ("rz", Some(t)) => Gate::Rz(t),
            _ => return Err(format!("unsupported statement `{s}`")),
        };
        let circuit = self.circuit.as_mut().ok_or("gate before qreg")?;
        circuit.push(gate, &wires).map_err(|e| e.to_string())?;
        Ok(())
    }

    fn qubit(&self, arg: &str) -> std::result::Result<usize, String> {
        indexed(arg, self.qreg.as_ref().ok_or("qubit used before qreg")?)
    }

    fn clbit(&self, arg: &str) -> std::result::Result<usize, String> {
        indexed(arg, self.creg.as_ref().ok_or("clbit used before creg")?)
    }
}

fn split_head(s: &str) -> (&str, &str) {
    let s = s.trim();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    }
}

fn register_ref(s: &str) -> std::result::Result<(String, usize), String> {
    let s = s.trim();
    let open = s.find('[').ok_or_else(|| format!("expected `name[index]`, got `{s}`"))?;
    let close = s.strip_suffix(']').ok_or_else(|| format!("expected `name[index]`, got `{s}`"))?;
    let index = close[open + 1..].trim().parse::<usize>().map_err(|e| format!("bad index in `{s}`: {e}"))?;
    Ok((s[..open].trim().to_string(), index))
}

fn indexed(arg: &str, reg: &(String, usize)) -> std::result::Result<usize, String> {
    let (name, index) = register_ref(arg)?;
    if name != reg.0 {
        return Err(format!("unknown register `{name}`"));
    }
    if index >= reg.1 {
        return Err(format!("index {index} out of range for {}[{}]", reg.0, reg.1));
    }
    Ok(index)
}

/// Evaluate a parameter expression: numbers, `pi`, `+ - * /`, unary minus
/// and parentheses.
pub fn eval(expr: &str) -> std::result::Result<f64, String> {
    let tokens = tokenize(expr)?;
    let mut pos = 0;
    let value = sum(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(format!("trailing input in `{expr}`"));
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Op(char),
}

fn tokenize(s: &str) -> std::result::Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if "+-*/()".contains(ch) {
            out.push(Tok::Op(ch));
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Tok::Num(text.parse().map_err(|_| format!("bad number `{text}`"))?));
        } else if s[i..].starts_with("pi") {
            out.push(Tok::Num(std::f64::consts::PI));
            i += 2;
        } else {
            return Err(format!("unexpected `{ch}` in `{s}`"));
        }
    }
    Ok(out)
}

fn sum(t: &[Tok], pos: &mut usize) -> std::result::Result<f64, String> {
    let mut acc = product(t, pos)?;
    while let Some(Tok::Op(op @ ('+' | '-'))) = t.get(*pos) {
        *pos += 1;
        let rhs = product(t, pos)?;
        acc = if *op == '+' { acc + rhs } else { acc - rhs };
    }
    Ok(acc)
}

fn product(t: &[Tok], pos: &mut usize) -> std::result::Result<f64, String> {
    let mut acc = unary(t, pos)?;
    while let Some(Tok::Op(op @ ('*' | '/'))) = t.get(*pos) {
        *pos += 1;
        let rhs = unary(t, pos)?;
        acc = if *op == '*' { acc * rhs } else { acc / rhs };
    }
    Ok(acc)
}

fn unary(t: &[Tok], pos: &mut usize) -> std::result::Result<f64, String> {
    match t.get(*pos) {
        Some(Tok::Op('-')) => {
            *pos += 1;
            Ok(-unary(t, pos)?)
        }
        Some(Tok::Op('+')) => {
            *pos += 1;
            unary(t, pos)
        }
        Some(Tok::Num(x)) => {
            *pos += 1;
            Ok(*x)
        }
        Some(Tok::Op('(')) => {
            *pos += 1;
            let v = sum(t, pos)?;
            if t.get(*pos) != Some(&Tok::Op(')')) {
                return Err("missing `)`".into());
            }
            *pos += 1;
            Ok(v)
        }
        other => Err(format!("unexpected token {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{build_decomposition_circuit, compile_circuit, distance_up_to_global_phase, swap_alpha, CouplingParams};
    use std::f64::consts::PI;

    #[test]
    fn expressions() {
        assert_eq!(eval("pi/2").unwrap(), PI / 2.0);
        assert_eq!(eval("-pi*(1+1)/4").unwrap(), -PI / 2.0);
        assert_eq!(eval("1.5e-3").unwrap(), 1.5e-3);
        assert_eq!(eval(" -  -2").unwrap(), 2.0);
        assert!(eval("pi +").is_err());
        assert!(eval("2 x").is_err());
    }

    #[test]
    fn angles_round_trip_bit_exact() {
        for x in [PI / 3.0, -1e-300, 0.1 + 0.2, f64::MAX, 0.0, -0.0] {
            assert_eq!(eval(&angle(x)).unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn decomposition_round_trip() {
        for alpha in [1.0, 0.5, 0.25, 0.125, 0.3, 0.7, 0.0] {
            let params = CouplingParams::from_alpha(alpha).unwrap();
            let circuit = build_decomposition_circuit(&params);
            let text = emit_circuit(&circuit).unwrap();
            assert!(text.starts_with("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\n"));
            let back = parse(&text).unwrap();
            assert_eq!(back.circuit, circuit);
            let d = distance_up_to_global_phase(&compile_circuit(&back.circuit).unwrap(), &swap_alpha(alpha)).unwrap();
            assert!(d.distance < 1e-10, "alpha {alpha}: {}", d.distance);
        }
    }

    #[test]
    fn measurement_and_comments() {
        let text = "// header comment\nOPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2]; creg c[1];\nry(pi/2) q[0]; // prep\nbarrier q[0],q[1];\ncx q[0],\n  q[1];\nmeasure q[0] -> c[0];\n";
        let p = parse(text).unwrap();
        assert_eq!(p.circuit.ops().len(), 2);
        assert_eq!(p.measurements, vec![(0, 0)]);
        let again = parse(&emit(&p).unwrap()).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let bad = "OPENQASM 2.0;\nqreg q[2];\nh q[0];\n";
        match parse(bad) {
            Err(Error::Qasm { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse("OPENQASM 3.0;").is_err());
        assert!(parse("OPENQASM 2.0;\nqreg q[1];\ncx q[0],q[1];").is_err());
        assert!(parse("OPENQASM 2.0;\nqreg q[1];\nry(1) q[0]").is_err());
    }

    #[test]
    fn opaque_gates_are_not_emitted() {
        let mut c = QuantumCircuit::new(2).unwrap();
        c.push(Gate::Unitary { name: "swap".into(), gate: swap_alpha(1.0) }, &[0, 1]).unwrap();
        assert!(emit_circuit(&c).is_err());
    }
}
