//! Trace serialization. Plain CSV, LF line endings, 17 significant digits
//! so a written trace reproduces the run bit for bit when parsed back.

use std::io::{self, Write};

use crate::simulator::TraceRecord;

pub const TRACE_HEADER: &str =
    "t,phi_d,phi,e1,sigma,delta,delta_dot,u_x,u1,u_eq,tau_sea,tau_d";

pub fn write_trace<W: Write>(mut w: W, trace: &[TraceRecord]) -> io::Result<()> {
    w.write_all(TRACE_HEADER.as_bytes())?;
    w.write_all(b"\n")?;
    for r in trace {
        // {:.16e} prints one digit before the point and 16 after: 17
        // significant digits, enough to round-trip any f64 exactly.
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.phi_d, r.phi, r.e1, r.sigma, r.delta, r.delta_dot, r.u_x, r.u1, r.u_eq,
            r.tau_sea, r.tau_d
        )?;
    }
    Ok(())
}

pub fn trace_to_string(trace: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace).expect("write to Vec cannot fail");
    String::from_utf8(buf).expect("trace text is ASCII")
}
