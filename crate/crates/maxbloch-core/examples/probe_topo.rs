//! Temporary development probe (not part of the test suite).

use maxbloch_core::*;
use std::time::Instant;

fn gyro_setup(
    radius: f64,
    eps_plane: f64,
    gyrotropy: f64,
    eps_axis: f64,
    smoothing: f64,
    cutoff: f64,
    a3: f64,
) -> (Lattice, PlaneWaveBasis, WeightFourier) {
    let lat = Lattice::tetragonal(1.0, a3).unwrap();
    let basis = PlaneWaveBasis::new(&lat, cutoff * 2.0 * std::f64::consts::PI).unwrap();
    let profile = MaterialProfile::GyrotropicRodArray {
        background: 1.0,
        radius,
        eps_plane,
        gyrotropy,
        eps_axis,
        smoothing: Some(smoothing),
    };
    let w = sample_weights(&profile, &lat, [32, 32, 16]).unwrap();
    let fourier = fourier_coefficients(&w).unwrap();
    (lat, basis, fourier)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let r: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.11);
    let ep: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(14.0);
    let g: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(12.4);
    let ea: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(15.0);
    let sm: f64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(1.0 / 32.0);
    let co: f64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(1.5);
    let a3: f64 = args.get(7).map(|s| s.parse().unwrap()).unwrap_or(0.6);
    let mesh_n: usize = args.get(8).map(|s| s.parse().unwrap()).unwrap_or(16);
    let run_fd: bool = args.get(9).map(|s| s != "0").unwrap_or(true);
    println!("rod r={r} ep={ep} g={g} ea={ea} sm={sm} cutoff={co} a3={a3}");

    let t0 = Instant::now();
    let (lat, basis, fourier) = gyro_setup(r, ep, g, ea, sm, co, a3);
    println!("N = {} plane waves  (setup {:.1}s)", basis.len(), t0.elapsed().as_secs_f64());

    // band scan on the k3 = +pi/2 slice
    let mesh = bz_mesh(&lat, [mesh_n, mesh_n, 2], [0.5, 0.5, -0.5]).unwrap();
    for slice in [0usize, 1] {
        let mut pts = Vec::new();
        for i in 0..mesh.len() {
            let c = mesh.grid_coords(i);
            if c[2] == slice {
                pts.push(mesh.point(c));
            }
        }
        let t1 = Instant::now();
        let bs =
            band_structure(&basis, &fourier, None, &pts, 12, AssemblyMode::Consistent).unwrap();
        println!(
            "slice {slice} band scan: {} pts ({:.1}s)",
            pts.len(),
            t1.elapsed().as_secs_f64()
        );
        for b in 1..=4 {
            let lo = bs.omegas.iter().map(|o| o[b]).fold(f64::INFINITY, f64::min);
            let hi = bs.omegas.iter().map(|o| o[b]).fold(0.0f64, f64::max);
            let gap_up = bs
                .omegas
                .iter()
                .map(|o| o[b + 1] - o[b])
                .fold(f64::INFINITY, f64::min);
            println!("  band {b}: [{lo:.4}, {hi:.4}], min gap to next = {gap_up:.4}");
        }
    }

    let bands = RelevantBands::new(1, 1).unwrap();
    let t2 = Instant::now();
    let setup = relevant_frames(&basis, &fourier, &mesh, &bands).unwrap();
    println!("frames ({:.1}s)", t2.elapsed().as_secs_f64());
    for (name, fam) in [
        ("em", &setup.em),
        ("electric", &setup.electric),
        ("magnetic", &setup.magnetic),
    ] {
        for slice in [0usize, 1] {
            match chern_fhs(&basis, &mesh, fam, (0, 1), slice) {
                Ok(s) => println!(
                    "{name:9} slice {slice}: raw {:+.6}, C = {}, minlink {:.4}",
                    s.raw, s.rounded, s.min_link_modulus
                ),
                Err(e) => println!("{name:9} slice {slice}: ERR {e}"),
            }
        }
    }

    for nf in [16usize, 32] {
        if !run_fd { break; }
        let fmesh = bz_mesh(&lat, [nf, nf, 2], [0.5, 0.5, -0.5]).unwrap();
        let t = Instant::now();
        match berry_curvature_fd(&basis, &fourier, &fmesh, &bands, 0) {
            Ok(v) => println!("FD  @{nf}^2: {v:+.6}  ({:.1}s)", t.elapsed().as_secs_f64()),
            Err(e) => println!("FD  @{nf}^2 ERR {e}"),
        }
    }
    let fd = berry_curvature_fd_field(&basis, &fourier, &mesh, &bands, 0).unwrap();
    let fhs = fhs_plaquette_field(&basis, &mesh, &setup.em, 0).unwrap();
    println!(
        "field totals: FD {:+.6}, FHS {:+.6}",
        fd.iter().sum::<f64>(),
        fhs.iter().sum::<f64>()
    );
    let mut diffs: Vec<(f64, usize, usize)> = (0..16usize)
        .flat_map(|ia| (0..16usize).map(move |ib| (ia, ib)))
        .map(|(ia, ib)| ((fd[ia * 16 + ib] - fhs[ia * 16 + ib]).abs(), ia, ib))
        .collect();
    diffs.sort_by(|x, y| y.0.total_cmp(&x.0));
    for &(d, ia, ib) in diffs.iter().take(10) {
        println!(
            "  cell ({ia:2},{ib:2}): fd {:+.4}  fhs {:+.4}  |diff| {d:.4}",
            fd[ia * 16 + ib],
            fhs[ia * 16 + ib]
        );
    }
}
