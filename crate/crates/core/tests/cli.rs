use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use netcode_core::simnet::Topology;

fn netcode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netcode")).args(args).output().unwrap()
}

fn topology(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("topologies").join(name)
}

#[test]
fn bundled_topologies_match_generators() {
    let mesh = Topology::parse(&fs::read_to_string(topology("mesh16.topo")).unwrap()).unwrap();
    assert_eq!(mesh, Topology::random_mesh(16, 2, 0.1, 2024).unwrap());
    assert_eq!(mesh.nodes().len(), 17);
    let fig = Topology::parse(&fs::read_to_string(topology("figure21.topo")).unwrap()).unwrap();
    assert_eq!(fig, Topology::figure21());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    let store = dir.path().join("s.nceh");
    let (input_s, store_s) = (input.to_str().unwrap(), store.to_str().unwrap());

    fs::write(&input, "p1 3 0011223344556677 8899aabbccddeeff 0102030405060708\np2 oops\n").unwrap();
    let out = netcode(&["ingest", input_s, "--store", store_s]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert!(!store.exists());

    fs::write(&input, "p1 3 0011223344556677 8899aabbccddeeff 0102030405060708\n").unwrap();
    let out = netcode(&["ingest", input_s, "--store", store_s]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        format!("ingested 1 records: 1 generations, 4 blocks written to {store_s}\n")
    );

    let out = netcode(&["retrieve", "p1", "3", "--mask", "001", "--store", store_s]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "physician-lab 0102030405060708\n");
    assert_eq!(netcode(&["retrieve", "p1", "4", "--store", store_s]).status.code(), Some(1));
    assert_eq!(netcode(&["retrieve", "p1", "3", "--mask", "000", "--store", store_s]).status.code(), Some(2));
    assert_eq!(netcode(&["retrieve", "p1", "3", "--mask", "12", "--store", store_s]).status.code(), Some(2));
    assert_eq!(netcode(&["retrieve", "p1", "3", "--store", "/nonexistent/s"]).status.code(), Some(1));

    let out = netcode(&["repair", "node-3", "--store", store_s]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "repaired 1 generations (1 new blocks), 0 degraded\n");

    let fig = topology("figure21.topo");
    let fig_s = fig.to_str().unwrap();
    assert_eq!(netcode(&["bench", "--topology", fig_s, "--trials", "10"]).status.code(), Some(2));
    assert_eq!(netcode(&["bench"]).status.code(), Some(2));
    assert_eq!(netcode(&["selftest"]).status.code(), Some(0));
}
