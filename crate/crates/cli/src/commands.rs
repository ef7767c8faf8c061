use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use dgpc::cost::theoretical_factor;
use dgpc::experiment::run_suite;
use dgpc::io::{dequantize, quantize, read_points, write_points, write_quantized};
use dgpc::{
    decode_with_header, encode_with_dequantization, representative_points, BoundsSpec, CodecConfig, CostReport,
    Dequantization, Generator, Header, QuantizedPointSet, RawPointCloud, Schedule, Snapshot, Traversal, WaveDecoder,
};

use crate::{CodingFlags, CompressArgs, DecompressArgs, ExperimentArgs, GenArgs, StatsArgs};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(format!("unknown report format '{s}' (expected text or csv)")),
        }
    }
}

pub fn open_input(path: &Path) -> Result<Box<dyn io::BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    open_input(path)?.read_to_end(&mut bytes)?;
    Ok(bytes)
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.as_os_str() == "-" {
        io::stdout().write_all(bytes)?;
        return Ok(());
    }
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn create(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout())));
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(Box::new(BufWriter::new(f)))
}

/// `"6"` for every axis or `"10,10,6"`.
pub fn per_axis<T: FromStr + Clone>(text: &str, dim: usize, what: &str) -> Result<Vec<T>> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let parse = |s: &str| s.parse::<T>().map_err(|_| anyhow::anyhow!("invalid {what} '{s}'"));
    match parts.len() {
        1 => Ok(vec![parse(parts[0])?; dim]),
        k if k == dim => parts.into_iter().map(parse).collect(),
        k => bail!("{what} lists {k} values for {dim} axes"),
    }
}

fn parse_bounds(text: &str, dim: usize) -> Result<Dequantization> {
    let pairs: Vec<&str> = text.split(',').collect();
    if pairs.len() != dim {
        bail!("--bounds lists {} ranges for {dim} axes", pairs.len());
    }
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for p in pairs {
        let (a, b) = p.split_once(':').with_context(|| format!("range '{p}' is not lo:hi"))?;
        let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
        if b.partial_cmp(&a) != Some(std::cmp::Ordering::Greater) {
            bail!("range '{p}' needs hi above lo");
        }
        lo.push(a);
        hi.push(b);
    }
    Ok(Dequantization { lo, hi })
}

impl CodingFlags {
    pub fn config(&self) -> CodecConfig {
        CodecConfig {
            axis_policy: self.axis_policy,
            traversal: if self.depth_first { Traversal::DepthFirst } else { Traversal::BreadthFirst },
            prediction: self.prediction,
            representative: self.representative,
        }
    }
}

/// Smallest bit count holding every value of each axis.
fn inferred_bits(cloud: &RawPointCloud) -> Option<Vec<u8>> {
    let integral = cloud.coords().iter().all(|&c| c >= 0.0 && c.fract() == 0.0 && c < 4294967296.0);
    if !integral || cloud.is_empty() {
        return None;
    }
    let (_, hi) = cloud.extent()?;
    Some(hi.iter().map(|&m| (64 - (m as u64).leading_zeros()).max(1) as u8).collect())
}

fn quantized_input(args: &CompressArgs) -> Result<(QuantizedPointSet, Option<Dequantization>)> {
    let cloud = read_points(open_input(&args.input)?, args.format, args.dim)?;
    let dim = match (cloud.dim(), args.dim) {
        (0, Some(d)) => d,
        (0, None) => bail!("empty input: give the dimension with --dim"),
        (d, _) => d,
    };
    let bounds = match &args.bits {
        Some(text) => BoundsSpec::new(&per_axis::<u8>(text, dim, "bit count")?)?,
        None => match inferred_bits(&cloud) {
            Some(bits) if args.bounds.is_none() => BoundsSpec::new(&bits)?,
            _ => bail!("real-valued or empty input needs --bits"),
        },
    };
    if args.bounds.is_none() && cloud.fits_integer_grid(&bounds) {
        return Ok((cloud.to_quantized(&bounds)?, None));
    }
    if cloud.is_empty() {
        return Ok((QuantizedPointSet::empty(bounds), None));
    }
    let range = match &args.bounds {
        Some(text) => parse_bounds(text, dim)?,
        None => {
            let (lo, mut hi) = cloud.extent().expect("nonempty");
            for a in 0..dim {
                if hi[a] <= lo[a] {
                    hi[a] = lo[a] + 1.0;
                }
            }
            Dequantization { lo, hi }
        }
    };
    Ok((quantize(&cloud, &bounds, &range)?, Some(range)))
}

pub fn print_report(report: Option<&CostReport>, header: &Header, container_len: usize, format: ReportFormat) -> Result<()> {
    let n = u64::from(header.count);
    let q = header.bounds.total_bits();
    let raw = dgpc::cost::raw_bytes(n, q);
    let bpv = report.map_or(0.0, CostReport::container_bits_per_point);
    let factor = report.map_or(0.0, CostReport::container_factor);
    let tf = if n > 0 { theoretical_factor(n, q) } else { 0.0 };
    let mut out = io::stdout().lock();
    match format {
        ReportFormat::Text => {
            writeln!(out, "points              {n}")?;
            writeln!(out, "raw bytes           {raw}")?;
            writeln!(out, "compressed bytes    {container_len}")?;
            writeln!(out, "bits per vertex     {bpv:.3}")?;
            writeln!(out, "factor              {factor:.2}")?;
            writeln!(out, "theoretical factor  {tf:.2}")?;
        }
        ReportFormat::Csv => {
            writeln!(out, "n,raw_bytes,compressed_bytes,bits_per_vertex,factor,theoretical_factor")?;
            writeln!(out, "{n},{raw},{container_len},{bpv:.4},{factor:.4},{tf:.4}")?;
        }
    }
    Ok(())
}

pub fn compress(args: &CompressArgs) -> Result<()> {
    let (points, range) = quantized_input(args)?;
    let config = args.coding.config();
    let bytes = match range {
        Some(r) => encode_with_dequantization(&points, &config, r)?,
        None => dgpc::encode(&points, &config)?,
    };
    write_output(&args.output, &bytes)?;
    let report = (!points.is_empty()).then(|| CostReport::from_container(&points, &bytes)).transpose()?;
    let (header, _) = Header::parse(&bytes)?;
    if args.output.as_os_str() != "-" {
        print_report(report.as_ref(), &header, bytes.len(), args.report)?;
    }
    Ok(())
}

fn emit(path: &Path, points: &QuantizedPointSet, header: &Header, integers: bool) -> Result<()> {
    let out = create(path)?;
    match (&header.dequantization, integers) {
        (Some(range), false) => write_points(out, &dequantize(points, range))?,
        _ => write_quantized(out, points)?,
    }
    Ok(())
}

pub fn decompress(args: &DecompressArgs) -> Result<()> {
    let bytes = read_bytes(&args.input)?;
    let (header, _) = Header::parse(&bytes)?;
    let policy = args.representative.unwrap_or(header.config.representative);
    let bounds = header.bounds.clone();
    let target = args.precision.as_deref().map(|p| per_axis::<u8>(p, bounds.dim(), "precision")).transpose()?;

    if (target.is_some() || args.snapshots.is_some()) && header.config.traversal == Traversal::DepthFirst {
        bail!("this stream is depth-first: it has no intermediate waves, so --precision and --snapshots are unavailable; decode it in full");
    }
    let mut target_level = None;
    if let Some(t) = &target {
        if t.iter().zip(bounds.bits()).any(|(p, b)| p > b) {
            eprintln!("dgpc: warning: requested precision exceeds the stream's {:?} bits; decoding to the end", bounds.bits());
        } else {
            let schedule = Schedule::new(&bounds, header.config.axis_policy);
            target_level = Some(schedule.level_for_precision(&bounds, t));
        }
    }

    if target_level.is_none() && args.snapshots.is_none() {
        let decoded = decode_with_header(&bytes)?;
        return emit(&args.output, &decoded.points, &header, args.integers);
    }

    let mut last: Option<Snapshot> = None;
    for wave in WaveDecoder::new(&bytes)? {
        let wave = wave?;
        if let Some(dir) = &args.snapshots {
            fs::create_dir_all(dir)?;
            let reps = representative_points(&wave, policy, args.seed);
            emit(&dir.join(format!("wave_{:03}.txt", wave.level)), &reps, &header, args.integers)?;
        }
        let done = target_level.is_some_and(|l| wave.level >= l);
        last = Some(wave);
        if done {
            break;
        }
    }
    let snap = last.context("stream holds no waves")?;
    let reps = representative_points(&snap, policy, args.seed);
    emit(&args.output, &reps, &header, args.integers)
}

pub fn gen(args: &GenArgs) -> Result<()> {
    let dim = if args.bits.contains(',') { args.bits.split(',').count() } else { args.dim };
    let bounds = BoundsSpec::new(&per_axis::<u8>(&args.bits, dim, "bit count")?)?;
    let generator = match args.generator {
        Generator::GaussianMixture { blobs, sigma } => Generator::GaussianMixture {
            blobs: args.blobs.unwrap_or(blobs),
            sigma: args.sigma.unwrap_or(sigma),
        },
        g => {
            if args.blobs.is_some() || args.sigma.is_some() {
                bail!("--blobs and --sigma apply to gaussian-mixture only");
            }
            g
        }
    };
    let points = dgpc::DatasetSpec::new(generator, args.n, bounds, args.seed).generate()?;
    write_quantized(create(&args.output)?, &points)?;
    Ok(())
}

pub fn stats(args: &StatsArgs) -> Result<()> {
    let bytes = read_bytes(&args.input)?;
    let decoded = decode_with_header(&bytes)?;
    let h = &decoded.header;
    if args.report == ReportFormat::Text {
        println!("dimension           {}", h.bounds.dim());
        println!("bits per axis       {:?}", h.bounds.bits());
        println!("prediction          {}", h.config.prediction);
        println!("traversal           {}", h.config.traversal);
        println!("axis policy         {}", h.config.axis_policy);
        println!("representative      {}", h.config.representative);
        if let Some(r) = &h.dequantization {
            println!("bounds              {:?} .. {:?}", r.lo, r.hi);
        }
    }
    let report = (!decoded.points.is_empty()).then(|| CostReport::from_container(&decoded.points, &bytes)).transpose()?;
    print_report(report.as_ref(), h, bytes.len(), args.report)
}

pub fn experiment(args: &ExperimentArgs) -> Result<()> {
    let mut out = io::stdout().lock();
    for line in run_suite(args.suite, args.seed)? {
        writeln!(out, "{line}")?;
    }
    Ok(())
}
