use std::fmt::Write as _;
use std::path::Path;

use wgm_cqed::atom::{lande_gf, transition_strength, TransitionTable};
use wgm_cqed::fields::{circular_overlap, mode_amplitude_vector, ModePolarization, Sense, Spherical};

use crate::output::{sha256_hex, Output};
use crate::CliError;

fn q_label(q: Spherical) -> &'static str {
    match q {
        Spherical::SigmaMinus => "sigma-",
        Spherical::Pi => "pi",
        Spherical::SigmaPlus => "sigma+",
    }
}

fn rt<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn export(dir: &Path) -> Result<String, CliError> {
    // no config file; the hash identifies the table set
    let out = Output::new(dir.to_path_buf(), sha256_hex(b"export-tables"), "export-tables")?;

    let table = TransitionTable::rb85_d2();
    let mut s = String::from("m_g,m_e,polarization,strength,amplitude\n");
    for t in &table.entries {
        let w = transition_strength(t.m_g, t.m_e).map_err(rt)?;
        writeln!(s, "{},{},{},{},{:.12}", t.m_g, t.m_e, q_label(t.q), w, t.amplitude).expect("string write");
    }
    out.csv("transitions.csv", &s)?;

    let mut s = String::from("manifold,J,I,F,g_J,g_F\n");
    for (name, j, f, gj) in [("5S1/2", 0.5, 3.0, 2.0), ("5P3/2", 1.5, 4.0, 4.0 / 3.0)] {
        let gf = lande_gf(j, 2.5, f, gj).map_err(rt)?;
        writeln!(s, "{name},{j},2.5,{f},{gj:.8},{gf:.8}").expect("string write");
    }
    out.csv("lande.csv", &s)?;

    let mut s = String::from("mode,overlap_sigma_minus,overlap_pi,overlap_sigma_plus\n");
    let modes = [
        ("TM+", ModePolarization::tm_silica(Sense::Plus)),
        ("TM-", ModePolarization::tm_silica(Sense::Minus)),
        ("TE+", ModePolarization::te(Sense::Plus)),
        ("TE-", ModePolarization::te(Sense::Minus)),
    ];
    for (name, pol) in modes {
        let v = mode_amplitude_vector(&pol, true).map_err(rt)?;
        let o: Vec<f64> = Spherical::ALL.iter().map(|&q| circular_overlap(&v, q)).collect::<Result<_, _>>().map_err(rt)?;
        writeln!(s, "{name},{:.6},{:.6},{:.6}", o[0], o[1], o[2]).expect("string write");
    }
    out.csv("overlaps.csv", &s)?;

    Ok(format!("export-tables: {} transitions, 2 Landé factors, 4 modes -> {}", table.entries.len(), dir.display()))
}
