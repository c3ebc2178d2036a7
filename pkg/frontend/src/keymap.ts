/**
 * Configurable keyboard bindings with on-screen reminders.
 *
 * Bindings are plain data so a deployment can rebind keys without touching
 * code; hudLines() feeds the bottom-left reminder panel.
 */

export interface KeyBindings {
  annotate: string;
  highlight: string;
  polygonAdd: string;
  polygonConfirm: string;
  undo: string;
  redo: string;
  toolBrush: string;
  toolPointBfs: string;
  toolPolygonBfs: string;
  toolSegmentPick: string;
  cycleLevelUp: string;
  cycleLevelDown: string;
  toggleClass: string;
  toggleMode: string;
  toggleBorders: string;
  toggleOverlay: string;
  toggleProjection: string;
}

export const DEFAULT_BINDINGS: KeyBindings = {
  annotate: "a",
  highlight: "h",
  polygonAdd: "q",
  polygonConfirm: "e",
  undo: "z",
  redo: "y",
  toolBrush: "1",
  toolPointBfs: "2",
  toolPolygonBfs: "3",
  toolSegmentPick: "4",
  cycleLevelUp: "]",
  cycleLevelDown: "[",
  toggleClass: "c",
  toggleMode: "x",
  toggleBorders: "b",
  toggleOverlay: "o",
  toggleProjection: "p",
};

export function hudLines(bindings: KeyBindings): string[] {
  return [
    `[${bindings.toolBrush}] brush  [${bindings.toolPointBfs}] point BFS  ` +
      `[${bindings.toolPolygonBfs}] polygon BFS  [${bindings.toolSegmentPick}] segment pick`,
    `[${bindings.annotate}] annotate under cursor  [${bindings.highlight}] hold to preview segment`,
    `[${bindings.polygonAdd}] add polygon vertex  [${bindings.polygonConfirm}] confirm polygon`,
    `[${bindings.toggleClass}] flood/dry  [${bindings.toggleMode}] fill/erase  ` +
      `[${bindings.cycleLevelDown}]/[${bindings.cycleLevelUp}] segmentation level`,
    `[${bindings.undo}] undo  [${bindings.redo}] redo  [${bindings.toggleBorders}] borders  ` +
      `[${bindings.toggleOverlay}] overlay  [${bindings.toggleProjection}] 2D/3D`,
  ];
}
