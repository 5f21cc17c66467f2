use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use graphon_core::cutnorm::CutNormEstimate;
use graphon_core::io::{
    eigen_rows, read_dense_csv, read_edge_list, write_dense_csv, write_edge_list, write_eigen_csv, write_operator,
    write_residual_csv, write_trajectory_csv, SampleManifest,
};
use graphon_core::kernel::ring_coefficients;
use graphon_core::sampling::degree_deviation_deterministic;
use graphon_core::solver::contraction_probe;
use graphon_core::spectra::ring_twisted_eigenvalues;
use graphon_core::{
    analyze, cut_distance, cutnorm, cutnorm_2, degree_deviation, discrete_jacobian, frozen_jacobian, integrate_rk4,
    perturbation_decay, CutNormMode, SamplingMode,
};

use crate::output::{
    instance_path, num, opt_seed, print_table, short, unix_now, verdict_cells, write_atomic, write_json, write_rows,
};
use crate::run::{build_graph, continuum_state, count_failures, solve_instance, Ctx};

fn estimate_cells(e: &CutNormEstimate) -> Vec<String> {
    vec![num(e.lower), num(e.upper), e.exact.map_or_else(String::new, num), format!("{:?}", e.method)]
}

pub fn sample(ctx: &Ctx, edge_list: bool) -> Result<usize> {
    let kernel = ctx.cfg.kernel()?;
    let results = ctx.for_each(|inst| {
        let g = build_graph(&kernel, ctx.cfg.mode, inst)?;
        let adj = instance_path(&ctx.out, "adjacency", inst.n, inst.seed, "csv");
        write_atomic(&adj, |w| Ok(write_dense_csv(w, &g.adjacency)?))?;
        if edge_list {
            let p = instance_path(&ctx.out, "edges", inst.n, inst.seed, "txt");
            write_atomic(&p, |w| Ok(write_edge_list(w, &g.adjacency)?))?;
        }
        let file = adj.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        let manifest = SampleManifest { created_unix: Some(unix_now()), ..SampleManifest::for_graph(&g, &kernel, file) };
        write_json(&instance_path(&ctx.out, "manifest", inst.n, inst.seed, "json"), &manifest)?;
        let dev = match ctx.cfg.mode {
            SamplingMode::Deterministic => degree_deviation_deterministic(&g, &kernel),
            _ => degree_deviation(&g, &kernel),
        };
        let cut = cut_distance(&g, &kernel, ctx.cfg.refinement, ctx.cfg.restarts)?;
        Ok((g.edge_density(), dev, cut))
    });
    let failed = count_failures(&results, |_| true);
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (inst, r) in &results {
        if let Ok((density, dev, cut)) = r {
            let mut row = vec![inst.n.to_string(), opt_seed(inst.seed), num(*density), num(*dev)];
            row.extend(estimate_cells(cut));
            rows.push(row);
            table.push(vec![inst.n.to_string(), opt_seed(inst.seed), short(*density), short(*dev), short(cut.value())]);
        }
    }
    write_rows(
        &ctx.out.join("sample_summary.csv"),
        &["n", "seed", "edge_density", "degree_deviation", "cut_lower", "cut_upper", "cut_exact", "cut_method"],
        &rows,
    )?;
    print_table(&["n", "seed", "density", "degree_dev", "cut_distance"], &table);
    Ok(failed)
}

pub fn cutnorm_cmd(ctx: &Ctx, input: Option<&Path>, mode: CutNormMode, second: bool) -> Result<usize> {
    let restarts = ctx.cfg.restarts;
    if let Some(path) = input {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let m = if path.extension().is_some_and(|e| e == "txt" || e == "edges") { read_edge_list(f)? } else { read_dense_csv(f)? };
        if m.nrows() != m.ncols() {
            bail!("{}: matrix is {}x{}, not square", path.display(), m.nrows(), m.ncols());
        }
        let first = cutnorm(&m, mode, restarts)?;
        let two = if second { Some(cutnorm_2(&m, restarts)?) } else { None };
        let out = serde_json::json!({ "n": m.nrows(), "cutnorm": first, "cutnorm_2": two });
        write_json(&ctx.out.join("cutnorm.json"), &out)?;
        let mut table = vec![vec!["cut".to_string(), short(first.lower), short(first.upper), first.exact.map_or("-".into(), short)]];
        if let Some(t) = two {
            table.push(vec!["cut_2".into(), short(t.lower), short(t.upper), t.exact.map_or("-".into(), short)]);
        }
        print_table(&["norm", "lower", "upper", "exact"], &table);
        return Ok(0);
    }
    let kernel = ctx.cfg.kernel()?;
    let results = ctx.for_each(|inst| {
        let g = build_graph(&kernel, ctx.cfg.mode, inst)?;
        Ok(cut_distance(&g, &kernel, ctx.cfg.refinement, restarts)?)
    });
    let failed = count_failures(&results, |_| true);
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (inst, r) in &results {
        if let Ok(e) = r {
            let mut row = vec![inst.n.to_string(), opt_seed(inst.seed)];
            row.extend(estimate_cells(e));
            rows.push(row);
            table.push(vec![inst.n.to_string(), opt_seed(inst.seed), short(e.lower), short(e.upper)]);
        }
    }
    write_rows(&ctx.out.join("cutnorm.csv"), &["n", "seed", "lower", "upper", "exact", "method"], &rows)?;
    print_table(&["n", "seed", "lower", "upper"], &table);
    Ok(failed)
}

pub fn solve(ctx: &Ctx) -> Result<usize> {
    let kernel = ctx.cfg.kernel()?;
    let model = ctx.cfg.model()?;
    let results = ctx.for_each(|inst| {
        let s = solve_instance(ctx, &model, &kernel, inst)?;
        write_json(&instance_path(&ctx.out, "solve", inst.n, inst.seed, "json"), &s.report)?;
        let p = instance_path(&ctx.out, "residuals", inst.n, inst.seed, "csv");
        write_atomic(&p, |w| Ok(write_residual_csv(w, &s.report)?))?;
        Ok(s.report)
    });
    let failed = count_failures(&results, |r| r.converged);
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (inst, r) in &results {
        let (n, seed) = (inst.n.to_string(), opt_seed(inst.seed));
        match r {
            Ok(rep) => {
                rows.push(vec![
                    n.clone(),
                    seed.clone(),
                    rep.converged.to_string(),
                    rep.iterations.to_string(),
                    num(rep.final_residual()),
                    num(rep.distance_to_continuum),
                ]);
                table.push(vec![n, seed, rep.converged.to_string(), rep.iterations.to_string(), short(rep.final_residual())]);
            }
            Err(_) => {
                rows.push(vec![n.clone(), seed.clone(), "false".into(), String::new(), String::new(), String::new()]);
                table.push(vec![n, seed, "error".into(), "-".into(), "-".into()]);
            }
        }
    }
    write_rows(
        &ctx.out.join("solve.csv"),
        &["n", "seed", "converged", "iterations", "residual", "distance_to_continuum"],
        &rows,
    )?;
    print_table(&["n", "seed", "converged", "iterations", "residual"], &table);
    Ok(failed)
}

pub fn spectrum(ctx: &Ctx, frozen: bool, ring_analytic: bool, export_operator: bool) -> Result<usize> {
    let kernel = ctx.cfg.kernel()?;
    let model = ctx.cfg.model()?;
    if ring_analytic {
        let m = ctx.cfg.m.context("--ring-analytic needs the twist m")?;
        let ell = ctx.cfg.ell_max.max(0);
        let coeffs = ring_coefficients(&kernel, (ell + m.abs()) as usize)
            .with_context(|| format!("{} is not a ring-type kernel", kernel.family()))?;
        let lam = ring_twisted_eigenvalues(&coeffs, m, -ell..=ell)?;
        let rows: Vec<Vec<String>> = lam.iter().map(|(l, v)| vec![l.to_string(), num(*v)]).collect();
        write_rows(&ctx.out.join("ring_eigenvalues.csv"), &["l", "lambda"], &rows)?;
        print_table(&["l", "lambda"], &lam.iter().map(|(l, v)| vec![l.to_string(), short(*v)]).collect::<Vec<_>>());
        if ctx.cfg.n_list.is_empty() {
            return Ok(0);
        }
    }
    ctx.cfg.validate()?;
    let gauge = ctx.options_for(&model).gauge;
    let results = ctx.for_each(|inst| {
        let op = if frozen {
            let g = build_graph(&kernel, ctx.cfg.mode, inst)?;
            frozen_jacobian(&model, &kernel, &continuum_state(ctx, &model, &kernel, &g)?)
        } else {
            let s = solve_instance(ctx, &model, &kernel, inst)?;
            if !s.report.converged {
                bail!("solve did not converge (residual {:.3e})", s.report.final_residual());
            }
            discrete_jacobian(&model, &s.graph, &s.report.final_u)?
        };
        if export_operator {
            let (h, b) = (
                instance_path(&ctx.out, "operator", inst.n, inst.seed, "json"),
                instance_path(&ctx.out, "operator", inst.n, inst.seed, "csv"),
            );
            let mut header = Vec::new();
            write_atomic(&b, |w| Ok(write_operator(&mut header, w, &op)?))?;
            write_atomic(&h, |w| Ok(w.write_all(&header)?))?;
        }
        let rep = analyze(&op, gauge, ctx.cfg.margin)?;
        write_json(&instance_path(&ctx.out, "spectrum", inst.n, inst.seed, "json"), &rep)?;
        Ok(rep)
    });
    let failed = count_failures(&results, |_| true);
    let mut eig = Vec::new();
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (inst, r) in &results {
        if let Ok(rep) = r {
            eig.extend(eigen_rows(&rep.eigenvalues, inst.n, inst.seed));
            let (v, detail) = verdict_cells(&rep.verdict);
            rows.push(vec![
                inst.n.to_string(),
                opt_seed(inst.seed),
                v.clone(),
                detail,
                num(rep.max_real_part()),
                num(rep.essential_interval.0),
                num(rep.essential_interval.1),
                rep.gauge_modes_excluded.to_string(),
            ]);
            table.push(vec![inst.n.to_string(), opt_seed(inst.seed), v, short(rep.max_real_part())]);
        }
    }
    write_atomic(&ctx.out.join("eigenvalues.csv"), |w| Ok(write_eigen_csv(w, &eig)?))?;
    write_rows(
        &ctx.out.join("verdicts.csv"),
        &["n", "seed", "verdict", "gap_or_count", "max_real_part", "essential_lo", "essential_hi", "gauge_modes_excluded"],
        &rows,
    )?;
    print_table(&["n", "seed", "verdict", "max_re"], &table);
    Ok(failed)
}

pub fn dynamics(ctx: &Ctx) -> Result<usize> {
    let kernel = ctx.cfg.kernel()?;
    let model = ctx.cfg.model()?;
    let cfg = &ctx.cfg;
    let results = ctx.for_each(|inst| {
        let s = solve_instance(ctx, &model, &kernel, inst)?;
        let tr = integrate_rk4(&model, &s.graph, &s.u_star.values, cfg.dt, cfg.t_end)?;
        let p = instance_path(&ctx.out, "trajectory", inst.n, inst.seed, "csv");
        write_atomic(&p, |w| Ok(write_trajectory_csv(w, &tr, cfg.stride)?))?;
        if tr.blow_up.is_some() || !s.report.converged {
            return Ok((tr.blow_up, s.report.converged, None));
        }
        let decay = perturbation_decay(&model, &s.graph, &s.report.final_u, cfg.eps, cfg.dt, cfg.t_end, inst.seed.unwrap_or(0))?;
        Ok((None, true, Some(decay)))
    });
    let failed = count_failures(&results, |(blow, conv, _)| blow.is_none() && *conv);
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (inst, r) in &results {
        if let Ok((blow, conv, decay)) = r {
            let d = decay.as_ref();
            rows.push(vec![
                inst.n.to_string(),
                opt_seed(inst.seed),
                blow.map_or_else(String::new, num),
                conv.to_string(),
                d.map_or_else(String::new, |d| d.decayed.to_string()),
                d.map_or_else(String::new, |d| num(d.rate)),
                d.map_or_else(String::new, |d| num(d.initial_deviation)),
                d.map_or_else(String::new, |d| num(d.final_deviation)),
            ]);
            table.push(vec![
                inst.n.to_string(),
                opt_seed(inst.seed),
                d.map_or("-".into(), |d| d.decayed.to_string()),
                d.map_or("-".into(), |d| short(d.rate)),
            ]);
        }
    }
    write_rows(
        &ctx.out.join("dynamics.csv"),
        &["n", "seed", "blow_up_time", "solve_converged", "decayed", "rate", "initial_deviation", "final_deviation"],
        &rows,
    )?;
    print_table(&["n", "seed", "decayed", "rate"], &table);
    Ok(failed)
}

pub fn probe(ctx: &Ctx) -> Result<usize> {
    let kernel = ctx.cfg.kernel()?;
    let model = ctx.cfg.model()?;
    let gauge = ctx.options_for(&model).gauge;
    let results = ctx.for_each(|inst| {
        let g = build_graph(&kernel, ctx.cfg.mode, inst)?;
        let u = continuum_state(ctx, &model, &kernel, &g)?;
        Ok(contraction_probe(&model, &g, &kernel, &u, ctx.cfg.rho, ctx.cfg.pairs, inst.seed.unwrap_or(0), gauge)?)
    });
    let failed = count_failures(&results, |_| true);
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (inst, r) in &results {
        if let Ok(p) = r {
            rows.push(vec![inst.n.to_string(), opt_seed(inst.seed), num(p.max_ratio_t), num(p.max_ratio_s)]);
            table.push(vec![inst.n.to_string(), opt_seed(inst.seed), short(p.max_ratio_t), short(p.max_ratio_s)]);
        }
    }
    write_rows(&ctx.out.join("probe.csv"), &["n", "seed", "max_ratio_t", "max_ratio_s"], &rows)?;
    print_table(&["n", "seed", "ratio_T", "ratio_S"], &table);
    Ok(failed)
}
