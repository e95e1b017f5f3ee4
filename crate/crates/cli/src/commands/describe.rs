use coxnet::preprocess::{describe as summarize, load_csv, Schema};
use coxnet::Result;

use super::{write_file, Outcome};
use crate::args::DescribeArgs;

pub fn describe(args: &DescribeArgs) -> Result<Outcome> {
    let schema = Schema::read(&args.data.schema)?;
    let table = load_csv(&args.data.data, &schema)?;
    let description = summarize(&table, args.bin_width)?;
    let out = &args.common.out_dir;
    write_file(out, "level_means.csv", description.level_table_csv())?;
    write_file(out, "histogram.csv", description.histogram.to_csv())?;
    print!("{}", description.level_table_text());
    println!();
    print!("{}", description.histogram.to_text());
    Ok(Outcome {
        inputs: vec![args.data.data.clone(), args.data.schema.clone()],
        ..Default::default()
    })
}
