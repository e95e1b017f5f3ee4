use std::fmt::Write as _;

use coxnet::eval::{cross_validate, kfold_split, mean, LinearModel, LinearPipeline, Model};
use coxnet::linear::{backward_eliminate, fit, FitOptions};
use coxnet::preprocess::{vif_screen, Standardizer};
use coxnet::Result;

use super::{load_data, save_bundle, write_file, Outcome};
use crate::args::FitLinearArgs;

pub fn fit_linear(args: &FitLinearArgs) -> Result<Outcome> {
    let loaded = load_data(&args.data)?;
    let ds = &loaded.dataset;
    let options = FitOptions {
        max_iterations: args.max_iterations,
        tolerance: args.tolerance,
        ridge: args.ridge,
        ..Default::default()
    };
    let vif_threshold = (!args.no_vif).then_some(args.vif_threshold);
    let alpha = (!args.no_elimination).then_some(args.alpha);
    let out = &args.common.out_dir;

    // Full-data model with its screening and elimination steps recorded.
    let standardizer = Standardizer::fit(ds.features());
    let mut z = standardizer.transform_dataset(ds)?;
    let mut vif_csv = String::from("feature,vif,status\n");
    if let Some(threshold) = vif_threshold {
        let screening = vif_screen(&z, threshold)?;
        for (name, v) in &screening.removed {
            let v = v.map_or_else(|| "constant".to_string(), |v| v.to_string());
            let _ = writeln!(vif_csv, "{name},{v},removed");
            log::info!("VIF screening removed {name} (VIF {v})");
        }
        for (name, v) in screening.retained.iter().zip(&screening.final_vifs) {
            let _ = writeln!(vif_csv, "{name},{v},retained");
        }
        z = z.select_named(&screening.retained)?;
    }
    write_file(out, "vif.csv", vif_csv)?;
    let mut elimination_csv = String::from("step,feature,p_value\n");
    let model_fit = match alpha {
        Some(alpha) => {
            let (f, removals) = backward_eliminate(&z, alpha, &options)?;
            for (step, r) in removals.iter().enumerate() {
                let _ = writeln!(elimination_csv, "{},{},{}", step + 1, r.feature, r.p_value);
            }
            f
        }
        None => fit(&z, &options)?,
    };
    write_file(out, "elimination.csv", elimination_csv)?;

    let pipeline = LinearPipeline {
        options,
        vif_threshold,
        elimination_alpha: alpha,
    };
    let folds = kfold_split(ds.events(), args.folds, args.seed)?;
    let c = cross_validate(&pipeline, ds, args.folds, args.seed)?;
    let mut cv_csv = String::from("fold,n_validation,c_index\n");
    for (f, (ci, rows)) in c.iter().zip(&folds).enumerate() {
        let _ = writeln!(cv_csv, "{},{},{ci}", f + 1, rows.len());
    }
    write_file(out, "cv.csv", cv_csv)?;

    let mut report = model_fit.report_table();
    let _ = writeln!(report, "mean C-index ({}-fold): {:.2}", args.folds, mean(&c));
    write_file(out, "report.txt", &report)?;
    print!("{report}");

    let model = Model::Linear(LinearModel {
        input_features: ds.feature_names().to_vec(),
        standardizer,
        fit: model_fit,
    });
    save_bundle(&out.join("model"), &model, &loaded)?;
    Ok(Outcome {
        inputs: vec![args.data.data.clone(), args.data.schema.clone()],
        seed: Some(args.seed),
        ..Default::default()
    })
}
