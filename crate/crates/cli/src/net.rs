use std::fs;
use std::io::{self, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread;

use anyhow::{bail, Context, Result};
use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use clap::Args;
use dgpc::io::write_quantized;
use dgpc::representative_points;
use dgpc::stream::{serve_connection, DatasetRegistry, HeadlessClient, Message, RefineRequest, ServerStateMachine};
use tower_http::services::ServeDir;

use crate::commands::read_bytes;

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// Container to serve, as id=path (repeatable).
    #[arg(long = "dataset", value_name = "ID=PATH", required = true)]
    pub datasets: Vec<String>,
    /// Plain TCP address; one thread per connection.
    #[arg(long)]
    pub listen: Option<String>,
    /// WebSocket address; /ws carries one frame per binary message.
    #[arg(long)]
    pub ws: Option<String>,
    /// Static files served next to /ws.
    #[arg(long, requires = "ws")]
    pub assets: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClientArgs {
    /// Server address.
    #[arg(long, conflicts_with = "local", required_unless_present = "local")]
    pub connect: Option<String>,
    /// Serve this container in-process instead of connecting.
    #[arg(long)]
    pub local: Option<PathBuf>,
    #[arg(long, default_value = "local")]
    pub dataset: String,
    /// Inclusive region as lo:hi per axis, comma-separated; whole domain
    /// when absent.
    #[arg(long)]
    pub region: Option<String>,
    /// Levels per request.
    #[arg(long, default_value_t = 1)]
    pub depth: u32,
    /// Byte budget per request.
    #[arg(long)]
    pub budget: Option<u32>,
    /// Number of requests; 0 repeats until the region stops changing.
    #[arg(long, default_value_t = 0)]
    pub steps: u32,
    /// Write every server frame (HEADER then BATCHes) to this file.
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// Write the final representative points here.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn registry(specs: &[String]) -> Result<Arc<DatasetRegistry>> {
    let mut reg = DatasetRegistry::new();
    for spec in specs {
        let (id, path) = spec.split_once('=').with_context(|| format!("dataset '{spec}' is not id=path"))?;
        let bytes = read_bytes(path.as_ref())?;
        reg.insert_container(id, &bytes).with_context(|| format!("cannot load {path}"))?;
    }
    Ok(Arc::new(reg))
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    if args.listen.is_none() && args.ws.is_none() {
        bail!("give --listen, --ws or both");
    }
    let reg = registry(&args.datasets)?;
    let tcp = match &args.listen {
        Some(addr) => {
            let listener = TcpListener::bind(addr).with_context(|| format!("cannot bind {addr}"))?;
            eprintln!("dgpc: listening on {}", listener.local_addr()?);
            let reg = reg.clone();
            Some(thread::spawn(move || accept_loop(listener, reg)))
        }
        None => None,
    };
    if let Some(addr) = &args.ws {
        let runtime = tokio::runtime::Runtime::new()?;
        runtime.block_on(serve_ws(addr, args.assets.clone(), reg))?;
    }
    if let Some(handle) = tcp {
        handle.join().expect("accept loop panicked")?;
    }
    Ok(())
}

fn accept_loop(listener: TcpListener, reg: Arc<DatasetRegistry>) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let reg = reg.clone();
        thread::spawn(move || {
            let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
            let result = stream.try_clone().map_err(Into::into).and_then(|w| serve_connection(reg, BufReader::new(stream), w));
            if let Err(e) = result {
                eprintln!("dgpc: connection {peer}: {e}");
            }
        });
    }
    Ok(())
}

async fn serve_ws(addr: &str, assets: Option<PathBuf>, reg: Arc<DatasetRegistry>) -> Result<()> {
    let mut app = Router::new().route("/ws", get(ws_upgrade));
    if let Some(dir) = assets {
        app = app.fallback_service(ServeDir::new(dir));
    }
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot bind {addr}"))?;
    eprintln!("dgpc: websocket bridge on ws://{}/ws", listener.local_addr()?);
    axum::serve(listener, app.with_state(reg)).await?;
    Ok(())
}

async fn ws_upgrade(State(reg): State<Arc<DatasetRegistry>>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| bridge(socket, reg))
}

async fn bridge(mut socket: WebSocket, reg: Arc<DatasetRegistry>) {
    let mut machine = ServerStateMachine::new(reg);
    while let Some(Ok(msg)) = socket.recv().await {
        let frame = match msg {
            WsMessage::Binary(b) => b,
            WsMessage::Close(_) => break,
            _ => continue,
        };
        let replies = match Message::from_frame(&frame) {
            Ok(m) => machine.handle(m),
            Err(e) => vec![Message::Error(e.to_string())],
        };
        for reply in replies {
            if socket.send(WsMessage::Binary(reply.to_frame())).await.is_err() {
                return;
            }
        }
        if machine.is_closed() {
            break;
        }
    }
}

fn parse_region(text: &str, dim: usize) -> Result<(Vec<u32>, Vec<u32>)> {
    let pairs: Vec<&str> = text.split(',').collect();
    if pairs.len() != dim {
        bail!("--region lists {} ranges for {dim} axes", pairs.len());
    }
    let mut lo = Vec::with_capacity(dim);
    let mut hi = Vec::with_capacity(dim);
    for p in pairs {
        let (a, b) = p.split_once(':').with_context(|| format!("range '{p}' is not lo:hi"))?;
        lo.push(a.trim().parse().with_context(|| format!("bad bound in '{p}'"))?);
        hi.push(b.trim().parse().with_context(|| format!("bad bound in '{p}'"))?);
    }
    Ok((lo, hi))
}

pub fn client(args: &ClientArgs) -> Result<()> {
    if let Some(addr) = &args.connect {
        let stream = TcpStream::connect(addr).with_context(|| format!("cannot connect to {addr}"))?;
        let writer = stream.try_clone()?;
        return run_client(args, BufReader::new(stream), writer);
    }
    let path = args.local.as_ref().expect("clap enforces --connect or --local");
    let mut reg = DatasetRegistry::new();
    reg.insert_container(args.dataset.clone(), &read_bytes(path)?)?;
    let reg = Arc::new(reg);
    let (c_read, s_write) = io::pipe()?;
    let (s_read, c_write) = io::pipe()?;
    let server = thread::spawn(move || serve_connection(reg, s_read, s_write));
    run_client(args, c_read, c_write)?;
    server.join().expect("local server panicked")?;
    Ok(())
}

fn run_client<R: Read, W: Write>(args: &ClientArgs, reader: R, writer: W) -> Result<()> {
    let mut client = HeadlessClient::connect(reader, writer, &args.dataset)?;
    if args.record.is_some() {
        client = client.recording();
    }
    let header = client.session().header().clone();
    let mut req = match &args.region {
        Some(text) => {
            let (lo, hi) = parse_region(text, header.bounds.dim())?;
            RefineRequest::new(lo, hi, args.depth)
        }
        None => RefineRequest::whole(&header.bounds, args.depth),
    };
    if let Some(b) = args.budget {
        req = req.with_budget(b);
    }
    req.validate(&header.bounds)?;

    let mut out = io::stdout().lock();
    writeln!(out, "step,cells_refined,batch_bytes,total_bytes,refinable")?;
    let mut step = 0u32;
    loop {
        if args.steps > 0 && step == args.steps {
            break;
        }
        let before = client.total_bytes();
        let delta = client.refine(&req)?;
        step += 1;
        let refinable = client.session().refinable();
        writeln!(out, "{step},{},{},{},{refinable}", delta.removed.len(), client.total_bytes() - before, client.total_bytes())?;
        if args.steps == 0 && delta.removed.is_empty() {
            break;
        }
    }
    if let Some(path) = &args.record {
        let frames: Vec<u8> = client.received().iter().flat_map(Message::to_frame).collect();
        fs::write(path, frames).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let snapshot = client.snapshot();
    let session = client.close()?;
    if let Some(path) = &args.output {
        let reps = match session.is_complete() {
            true => session.points()?,
            false => representative_points(&snapshot, header.config.representative, 0),
        };
        write_quantized(fs::File::create(path)?, &reps)?;
    }
    Ok(())
}
