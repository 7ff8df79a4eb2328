//! Canonical text format for scenes and corpora.
//!
//! ```text
//! scene <height> <width> <background>
//! <id> <class-label> <row> <col> <size> <color>
//! ...
//! end
//! ```
//!
//! Objects are written in ascending id order, fields separated by a single
//! space, lines terminated by `\n`. A corpus is a concatenation of scenes.

use std::fmt::Write as _;

use super::{Scene, SceneObject, Vocabulary};
use crate::error::{Error, Result};

pub fn write_scene(scene: &Scene, vocab: &Vocabulary) -> String {
    let mut out = String::new();
    push_scene(&mut out, scene, vocab);
    out
}

fn push_scene(out: &mut String, scene: &Scene, vocab: &Vocabulary) {
    let _ = writeln!(
        out,
        "scene {} {} {}",
        scene.canvas.0, scene.canvas.1, scene.background
    );
    for o in scene.objects_by_id() {
        let label = vocab
            .class_labels
            .get(o.class_id as usize)
            .map(String::as_str)
            .unwrap_or("?");
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            o.id, label, o.row, o.col, o.size, o.color
        );
    }
    out.push_str("end\n");
}

pub fn write_corpus(scenes: &[Scene], vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for s in scenes {
        push_scene(&mut out, s, vocab);
    }
    out
}

pub fn parse_scene(text: &str, vocab: &Vocabulary) -> Result<Scene> {
    let mut scenes = parse_corpus(text, vocab)?;
    match scenes.len() {
        1 => Ok(scenes.pop().unwrap()),
        n => Err(Error::Parse {
            line: 0,
            msg: format!("expected one scene, found {n}"),
        }),
    }
}

pub fn parse_corpus(text: &str, vocab: &Vocabulary) -> Result<Vec<Scene>> {
    let mut scenes = Vec::new();
    let mut current: Option<Scene> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let err = |msg: String| Error::Parse { line: lineno, msg };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        match (fields[0], current.as_mut()) {
            ("scene", None) => {
                if fields.len() != 4 {
                    return Err(err("scene header needs 3 fields".into()));
                }
                let nums = parse_nums(&fields[1..]).map_err(err)?;
                current = Some(Scene::empty(
                    (to_u8(nums[0], lineno)?, to_u8(nums[1], lineno)?),
                    to_u8(nums[2], lineno)?,
                ));
            }
            ("scene", Some(_)) => return Err(err("missing `end` before new scene".into())),
            ("end", Some(_)) => {
                let scene = current.take().unwrap();
                vocab
                    .check_scene(&scene)
                    .map_err(|e| err(e.to_string()))?;
                scenes.push(scene);
            }
            (_, None) => return Err(err(format!("unexpected line `{line}`"))),
            (_, Some(scene)) => {
                if fields.len() != 6 {
                    return Err(err("object line needs 6 fields".into()));
                }
                let class_id = vocab
                    .class_id(fields[1])
                    .ok_or_else(|| err(format!("unknown class `{}`", fields[1])))?;
                let id: u32 = fields[0]
                    .parse()
                    .map_err(|_| err(format!("bad id `{}`", fields[0])))?;
                let nums = parse_nums(&fields[2..]).map_err(err)?;
                scene.objects.push(SceneObject {
                    id,
                    class_id,
                    row: to_u8(nums[0], lineno)?,
                    col: to_u8(nums[1], lineno)?,
                    size: to_u8(nums[2], lineno)?,
                    color: to_u8(nums[3], lineno)?,
                });
            }
        }
    }
    if current.is_some() {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: "unterminated scene".into(),
        });
    }
    Ok(scenes)
}

fn parse_nums(fields: &[&str]) -> std::result::Result<Vec<u64>, String> {
    fields
        .iter()
        .map(|f| f.parse::<u64>().map_err(|_| format!("bad number `{f}`")))
        .collect()
}

fn to_u8(v: u64, line: usize) -> Result<u8> {
    u8::try_from(v).map_err(|_| Error::Parse {
        line,
        msg: format!("value {v} out of range"),
    })
}
